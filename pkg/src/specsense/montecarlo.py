"""Event-level Monte Carlo of the three sensing protocols.

Trials run in fixed blocks of ``BLOCK_SIZE``; each block draws from its own
generator keyed by (master seed, stream, strategy, hypothesis, block index)
and block results are reduced in index order. The partition never depends
on the worker count, so any ``SPECSENSE_THREADS`` setting gives identical
numbers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .coop import coop_threshold, relay_scale
from .distributed import (DistributedConfig, calibrate_false_alarm, incremental_pass,
                          iteration_count)
from .metrics import path_hop_distance, relay_hop_distance
from .model import (ChannelDraw, ConfigError, Hypothesis, Snr, Strategy, SystemParams,
                    complex_gaussian)
from .noncoop import noncoop_threshold

BLOCK_SIZE = 4096
Z95 = 1.96

_STREAMS = {"detection": 1, "latency": 2, "energy": 3, "node2": 4, "incremental": 5}
_STRATEGY_CODE = {Strategy.NCS: 0, Strategy.CS: 1, Strategy.DS: 2}


@dataclass(frozen=True)
class TrialPlan:
    n_trials: int
    master_seed: int
    hypothesis: Hypothesis
    strategy: Strategy

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be positive, got {self.n_trials}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    half_width_95: float
    n_trials: int
    censored: int = 0

    @property
    def std_error(self) -> float:
        return self.half_width_95 / Z95

    @classmethod
    def proportion(cls, successes: int, n: int) -> "SimEstimate":
        p = successes / n
        return cls(p, Z95 * math.sqrt(p * (1.0 - p) / n), n)

    @classmethod
    def from_sums(cls, total: float, total_sq: float, n: int, censored: int = 0) -> "SimEstimate":
        if n == 0:
            return cls(math.nan, math.nan, 0, censored)
        mean = total / n
        var = max(0.0, (total_sq - n * mean * mean) / (n - 1)) if n > 1 else 0.0
        return cls(mean, Z95 * math.sqrt(var / n), n, censored)

    def z_score(self, expected: float, floor_se: float = 0.0) -> float:
        """(mean - expected) in standard errors.

        When the sample shows no spread, the model standard error is used
        instead: `floor_se` if given, else the binomial one for 0/1 outcomes.
        """
        se = self.std_error
        if se == 0.0:
            se = floor_se
        if se == 0.0:
            se = math.sqrt(max(expected * (1.0 - expected), 0.0) / self.n_trials) \
                if 0.0 <= expected <= 1.0 else 0.0
        if se == 0.0:
            return 0.0 if math.isclose(self.mean, expected, rel_tol=1e-12, abs_tol=1e-300) \
                else math.inf
        return (self.mean - expected) / se

    def agrees(self, expected: float, n_se: float = 3.0, floor_se: float = 0.0) -> bool:
        return abs(self.z_score(expected, floor_se)) <= n_se


def worker_count() -> int:
    raw = os.environ.get("SPECSENSE_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"SPECSENSE_THREADS must be an integer, got {raw!r}") from None
        if value < 1:
            raise ConfigError("SPECSENSE_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


def recommended_trials(p: float, base: int = 100_000) -> int:
    """`base` trials, ten times that for tail probabilities below 0.05."""
    return 10 * base if min(p, 1.0 - p) < 0.05 else base


def _run_blocks(plan: TrialPlan, stream: str, fn: Callable[[np.random.Generator, int], tuple]):
    sizes = [BLOCK_SIZE] * (plan.n_trials // BLOCK_SIZE)
    if plan.n_trials % BLOCK_SIZE:
        sizes.append(plan.n_trials % BLOCK_SIZE)
    key = [plan.master_seed, _STREAMS[stream], _STRATEGY_CODE[Strategy(plan.strategy)],
           int(plan.hypothesis)]
    jobs = [(np.random.default_rng(np.random.SeedSequence(key + [i])), m)
            for i, m in enumerate(sizes)]
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(rng, m) for rng, m in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# --- protocol samplers: each draws m independent rounds ---------------------------

def _receive(p: SystemParams, theta: int, rng: np.random.Generator, m: int) -> np.ndarray:
    h = complex_gaussian(rng, (m, p.n_nodes), p.sigma_h2)
    w = complex_gaussian(rng, (m, p.n_nodes), p.sigma_w2)
    return p.primary_power * theta * h + w


def _ncs_round(p: SystemParams, theta: int, rng, m: int) -> np.ndarray:
    votes = np.abs(_receive(p, theta, rng, m)) ** 2 > noncoop_threshold(p)
    return votes.sum(axis=1) > p.n_nodes // 2


def _ds_round(p: SystemParams, theta: int, rng, m: int, p_prime: float,
              cfg: DistributedConfig) -> np.ndarray:
    y_sq = np.abs(_receive(p, theta, rng, m)) ** 2
    t_common = cfg.common_node_threshold
    theta_hat = y_sq.sum(axis=1) / (p.n_nodes * t_common)
    return theta_hat > cfg.decision_level(p_prime)


@dataclass
class _CoopRound:
    t1: np.ndarray
    t2: np.ndarray
    n_fail: np.ndarray
    relayed_hits: np.ndarray
    node_energy: np.ndarray


def _cs_round(p: SystemParams, snr: Snr, theta: int, rng, m: int) -> _CoopRound:
    n = p.n_nodes
    y1 = _receive(p, theta, rng, m)
    fail = np.abs(y1) ** 2 <= noncoop_threshold(p)
    t1 = (~fail).sum(axis=1) > n // 2

    partner = np.arange(n) ^ 1
    h12 = complex_gaussian(rng, (m, n // 2), p.relay_gain2 / 2.0)[:, np.arange(n) // 2]
    beta = relay_scale(p, snr, theta)
    y2 = _receive(p, theta, rng, m) + math.sqrt(beta) * h12 * y1[:, partner]
    hit = np.abs(y2) ** 2 / (2.0 * p.sigma_w2) > coop_threshold(p)

    # node j decides in T2 only when its partner failed in T1 and relayed
    has_relay = fail[:, partner]
    voters = has_relay.sum(axis=1)
    votes = (hit & has_relay).sum(axis=1)
    t2 = ~t1 & (voters > 0) & (votes > voters // 2)
    energy = p.eta * (1.0 + fail * relay_hop_distance(n))
    return _CoopRound(t1, t2, voters, votes, energy)


# --- public oracle ----------------------------------------------------------------

def _require_even(params: SystemParams):
    if params.n_nodes % 2:
        raise ConfigError(f"cooperative pairing needs an even node count, got N={params.n_nodes}")


def simulate_detection(params: SystemParams, snr: Snr, plan: TrialPlan,
                       cfg: DistributedConfig | None = None) -> SimEstimate:
    """Fraction of rounds in which the fusion center declares the primary present.

    A round is one slot for NCS, one estimation attempt for DS and one
    two-slot cycle for CS.
    """
    if plan.strategy == Strategy.CS:
        return simulate_coop_details(params, snr, plan).p_fc_total
    p = params.with_snr(snr)
    theta = Hypothesis(plan.hypothesis).theta
    if plan.strategy == Strategy.NCS:
        def block(rng, m):
            return int(_ncs_round(p, theta, rng, m).sum())
    else:
        cfg = cfg or DistributedConfig()
        p_prime = calibrate_false_alarm(p)

        def block(rng, m):
            return int(_ds_round(p, theta, rng, m, p_prime, cfg).sum())
    return SimEstimate.proportion(sum(_run_blocks(plan, "detection", block)), plan.n_trials)


@dataclass(frozen=True)
class CoopSimDetails:
    p_fc_t1: SimEstimate
    p_fc_t2: SimEstimate
    p_fc_total: SimEstimate
    n_prime: SimEstimate
    p_c_relayed: SimEstimate


def simulate_coop_details(params: SystemParams, snr: Snr, plan: TrialPlan) -> CoopSimDetails:
    """Per-slot breakdown of the two-slot cooperative cycle."""
    _require_even(params)
    p = params.with_snr(snr)
    theta = Hypothesis(plan.hypothesis).theta

    def block(rng, m):
        r = _cs_round(p, snr, theta, rng, m)
        nf = r.n_fail.astype(float)
        return (int(r.t1.sum()), int(r.t2.sum()), float(nf.sum()), float((nf * nf).sum()),
                int(r.relayed_hits.sum()), int(r.n_fail.sum()))

    parts = _run_blocks(plan, "detection", block)
    t1, t2, nf, nf2, hits, relayed = (sum(col) for col in zip(*parts))
    n = plan.n_trials
    return CoopSimDetails(
        p_fc_t1=SimEstimate.proportion(t1, n),
        p_fc_t2=SimEstimate.proportion(t2, n),
        p_fc_total=SimEstimate.proportion(t1 + t2, n),
        n_prime=SimEstimate.from_sums(nf, nf2, n),
        p_c_relayed=SimEstimate.proportion(hits, relayed) if relayed else
        SimEstimate(math.nan, math.nan, 0),
    )


def simulate_node2_detection(params: SystemParams, snr: Snr, plan: TrialPlan) -> SimEstimate:
    """Node2's T2 decision on a fresh relay-pair draw, with no T1 conditioning."""
    p = params.with_snr(snr)
    theta = Hypothesis(plan.hypothesis).theta
    beta = relay_scale(p, snr, theta)
    lam = coop_threshold(p)

    one = replace(p, n_nodes=1, n_clusters=1)

    def block(rng, m):
        y1 = _receive(one, theta, rng, m)[:, 0]
        h12 = complex_gaussian(rng, m, p.relay_gain2 / 2.0)
        y2 = _receive(one, theta, rng, m)[:, 0] + math.sqrt(beta) * h12 * y1
        return int((np.abs(y2) ** 2 / (2.0 * p.sigma_w2) > lam).sum())

    return SimEstimate.proportion(sum(_run_blocks(plan, "node2", block)), plan.n_trials)


def simulate_detection_latency(params: SystemParams, snr: Snr, plan: TrialPlan,
                               cfg: DistributedConfig | None = None,
                               max_slots: int = 1_000_000) -> SimEstimate:
    """Mean slots until the first fusion success, counted per protocol.

    NCS attempts cost one slot; CS cycles cost one slot when T1 succeeds and
    two otherwise; DS attempts cost N_s * K slots. Trials still undetected
    after `max_slots` are censored: excluded from the mean and counted in
    ``SimEstimate.censored``.
    """
    if Hypothesis(plan.hypothesis) != Hypothesis.H1:
        raise ValueError("detection latency is defined under H1 only")
    p = params.with_snr(snr)
    strategy = Strategy(plan.strategy)
    if strategy == Strategy.CS:
        _require_even(p)
    cfg = cfg or DistributedConfig()
    p_prime = calibrate_false_alarm(p) if strategy == Strategy.DS else None
    ds_cost = p.nodes_per_cluster * iteration_count(p)

    def block(rng, m):
        slots = np.zeros(m)
        active = np.arange(m)
        while active.size:
            k = active.size
            if strategy == Strategy.NCS:
                done = _ncs_round(p, 1, rng, k)
                slots[active] += 1
            elif strategy == Strategy.DS:
                done = _ds_round(p, 1, rng, k, p_prime, cfg)
                slots[active] += ds_cost
            else:
                r = _cs_round(p, snr, 1, rng, k)
                done = r.t1 | r.t2
                slots[active] += np.where(r.t1, 1, 2)
            active = active[~done]
            over = slots[active] >= max_slots
            if over.any():
                slots[active[over]] = np.nan
                active = active[~over]
        ok = slots[~np.isnan(slots)]
        return float(ok.sum()), float((ok * ok).sum()), int(ok.size), int(m - ok.size)

    parts = _run_blocks(plan, "latency", block)
    total, total_sq, n_ok, censored = (sum(col) for col in zip(*parts))
    return SimEstimate.from_sums(total, total_sq, n_ok, censored)


@dataclass(frozen=True)
class EnergySim:
    per_node: np.ndarray
    total: SimEstimate
    fairness_mu: float


def simulate_energy(params: SystemParams, snr: Snr, plan: TrialPlan) -> EnergySim:
    """Energy per sensing round, eta per unit of transmission distance.

    ``per_node`` is the mean energy of each node; ``fairness_mu`` is the
    largest single-round max/min ratio observed.
    """
    p = params.with_snr(snr)
    n, eta = p.n_nodes, p.eta
    strategy = Strategy(plan.strategy)
    if strategy == Strategy.NCS:
        per_round = np.full(n, eta)
    elif strategy == Strategy.DS:
        k = iteration_count(p)
        d = path_hop_distance(n, p.log_base)
        per_round = np.full(n, eta * d)
        heads = np.arange(p.nodes_per_cluster - 1, n, p.nodes_per_cluster)
        per_round[heads] += eta
        per_round = k * per_round
    else:
        _require_even(p)
        theta = Hypothesis(plan.hypothesis).theta

        def block(rng, m):
            e = _cs_round(p, snr, theta, rng, m).node_energy
            tot = e.sum(axis=1)
            ratio = float((e.max(axis=1) / e.min(axis=1)).max())
            return e.sum(axis=0), float(tot.sum()), float((tot * tot).sum()), ratio

        parts = _run_blocks(plan, "energy", block)
        node_sum = np.sum([part[0] for part in parts], axis=0)
        total = SimEstimate.from_sums(sum(part[1] for part in parts),
                                      sum(part[2] for part in parts), plan.n_trials)
        return EnergySim(node_sum / plan.n_trials, total, max(part[3] for part in parts))

    total = float(per_round.sum())
    return EnergySim(per_round, SimEstimate(total, 0.0, plan.n_trials),
                     float(per_round.max() / per_round.min()))


def simulate_incremental_detection(params: SystemParams, snr: Snr, plan: TrialPlan,
                                   cfg: DistributedConfig | None = None) -> SimEstimate:
    """DS detection with the estimate produced by an explicit incremental pass.

    Slow (a Python loop per trial); intended for small fidelity checks.
    """
    p = params.with_snr(snr)
    cfg = cfg or DistributedConfig()
    theta = Hypothesis(plan.hypothesis).theta
    level = cfg.decision_level(calibrate_false_alarm(p))

    def block(rng, m):
        hits = 0
        for _ in range(m):
            h = complex_gaussian(rng, p.n_nodes, p.sigma_h2)
            w = complex_gaussian(rng, p.n_nodes, p.sigma_w2)
            draw = ChannelDraw(h, w, p.primary_power * theta * h + w, theta)
            hits += incremental_pass(draw, cfg, p).final_estimate > level
        return hits

    return SimEstimate.proportion(sum(_run_blocks(plan, "incremental", block)), plan.n_trials)
