"""Two-slot amplify-and-forward cooperative strategy.

Nodes are paired (0, 1), (2, 3), ... In slot T1 every node runs the baseline
energy detector. A node that fails in T1 forwards its T1 sample, scaled by
sqrt(beta_1), to its partner, which decides in T2 on its own fresh reception
plus the relayed copy. Relay-slot quantities are expressed with the noise
power normalized to one, so sigma_h^2 enters only through the SNR.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from .model import ConfigError, Snr, SystemParams
from .noncoop import noncoop_node_detection, noncoop_threshold
from .numerics import (binomial_tail_exceeds_half, expanding_bracket, phi,
                       solve_monotone_decreasing)


@dataclass(frozen=True)
class CoopAnalysis:
    lambda_nc: float
    lambda_c: float
    p_node: float
    p_c: float
    p_fc_t1: float
    p_fc_t2: float
    p_fc_total: float
    n_prime: float
    n_prime_rounded: int


def _require_pairs(params: SystemParams):
    if params.n_nodes % 2:
        raise ConfigError(f"cooperative pairing needs an even node count, got N={params.n_nodes}")


def relay_gain(params: SystemParams) -> float:
    """Mean relayed power P~ E{|h12|^2}."""
    return params.relay_power * params.relay_gain2


def relay_scale(params: SystemParams, snr: Snr, theta: int) -> float:
    """AF amplification beta_1 = P~ / (theta^2 SNR + 1)."""
    return params.relay_power / (theta * theta * snr.linear + 1.0)


@functools.lru_cache(maxsize=256)
def _threshold(alpha: float, b: float) -> float:
    if b == 0.0:
        return -math.log(alpha)

    def f(x):
        return phi(x, 1.0, b)

    return solve_monotone_decreasing(f, alpha, expanding_bracket(f, alpha, hi=-math.log(alpha)))


def coop_threshold(params: SystemParams) -> float:
    """T2 threshold solving phi(lambda; 1, P~ E{|h12|^2}) = alpha."""
    return _threshold(params.alpha, relay_gain(params))


def coop_node2_detection(params: SystemParams, snr: Snr) -> float:
    """Node2 detection probability in T2 under H1 (theta = 1)."""
    # beta_1 (SNR + 1) cancels, leaving the same relay weight as the threshold equation
    return phi(coop_threshold(params), snr.linear + 1.0, relay_gain(params))


def rounded_n_prime(n_prime: float) -> int:
    return max(0, int(math.floor(n_prime + 0.5)))


def coop_fusion(params: SystemParams, snr: Snr) -> CoopAnalysis:
    _require_pairs(params)
    n = params.n_nodes
    p_node = noncoop_node_detection(params, snr)
    p_t1 = binomial_tail_exceeds_half(n, p_node)
    n_prime = (1.0 - p_node) * n
    n_round = rounded_n_prime(n_prime)
    p_c = coop_node2_detection(params, snr)
    p_t2 = (1.0 - p_t1) * binomial_tail_exceeds_half(n_round, p_c)
    return CoopAnalysis(
        lambda_nc=noncoop_threshold(params),
        lambda_c=coop_threshold(params),
        p_node=p_node,
        p_c=p_c,
        p_fc_t1=p_t1,
        p_fc_t2=p_t2,
        p_fc_total=p_t1 + p_t2,
        n_prime=n_prime,
        n_prime_rounded=n_round,
    )
