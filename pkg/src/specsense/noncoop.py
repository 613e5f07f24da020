"""Baseline strategy: per-node energy detection, hard majority vote at the fusion center."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Snr, SystemParams
from .numerics import binomial_tail_exceeds_half


@dataclass(frozen=True)
class NoncoopAnalysis:
    lam: float
    p_node: float
    p_fusion: float


def noncoop_threshold(params: SystemParams) -> float:
    """Energy threshold giving per-node false-alarm probability alpha."""
    return -2.0 * params.sigma_w2 * math.log(params.alpha)


def false_alarm_at(params: SystemParams, lam: float) -> float:
    return math.exp(-lam / (2.0 * params.sigma_w2))


def noncoop_node_detection(params: SystemParams, snr: Snr) -> float:
    return params.alpha ** (1.0 / (1.0 + snr.linear))


def node_detection_from_tail(params: SystemParams, snr: Snr) -> float:
    """Same quantity from the H1 exponential tail at the threshold; used as a cross-check."""
    p = params.with_snr(snr)
    return math.exp(-noncoop_threshold(p) / (2.0 * (p.sigma_h2 + p.sigma_w2)))


def noncoop_fusion(params: SystemParams, snr: Snr) -> NoncoopAnalysis:
    p_node = noncoop_node_detection(params, snr)
    return NoncoopAnalysis(
        lam=noncoop_threshold(params),
        p_node=p_node,
        p_fusion=binomial_tail_exceeds_half(params.n_nodes, p_node),
    )


def noncoop_false_alarm(params: SystemParams) -> float:
    """Fusion false-alarm rate: every node fires with probability exactly alpha."""
    return binomial_tail_exceeds_half(params.n_nodes, params.alpha)
