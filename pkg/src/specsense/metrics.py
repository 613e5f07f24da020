"""Agility (expected slots to first detection), energy and fairness per strategy.

Energy is counted per sensing round with unit node-to-fusion distance, relay
hops of N^-1/2 and path hops of |log N| / sqrt(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .coop import CoopAnalysis
from .distributed import DistributedAnalysis, iteration_count
from .model import ConfigError, Snr, Strategy, SystemParams
from .noncoop import NoncoopAnalysis, noncoop_node_detection


class InfiniteAgilityError(ValueError):
    """Detection probability is zero, so the expected detection time is unbounded."""


@dataclass(frozen=True)
class AgilityReport:
    strategy: Strategy
    expected_slots: float
    renewal_slots: float | None = None
    floor_slots: int | None = None
    degenerate: bool = False

    @property
    def simulation_consistent_slots(self) -> float:
        return self.expected_slots if self.renewal_slots is None else self.renewal_slots


@dataclass(frozen=True)
class EnergyReport:
    strategy: Strategy
    total_energy: float
    fairness_mu: float
    e_max: float
    e_min: float


def expected_slots_geometric(p: float) -> float:
    """Mean of a geometric number of attempts with success probability p."""
    if not 0.0 < p <= 1.0:
        raise InfiniteAgilityError(f"success probability must lie in (0, 1], got {p!r}")
    return 1.0 / p


def agility_noncoop(analysis: NoncoopAnalysis) -> AgilityReport:
    return AgilityReport(Strategy.NCS, expected_slots_geometric(analysis.p_fusion))


def coop_slots_literal(p_t1: float, p_t2: float) -> float:
    """Expected slots composed as two separate geometric waits: 1/p_T1 + 2/p_T2."""
    return expected_slots_geometric(p_t1) + 2.0 * expected_slots_geometric(p_t2)


def coop_slots_renewal(p_t1: float, p_t2: float) -> float:
    """Mean slots to first fusion success when each cycle ends after 1 slot on
    a T1 success and after 2 slots otherwise: (2 - p_T1) / (p_T1 + p_T2)."""
    return (2.0 - p_t1) * expected_slots_geometric(p_t1 + p_t2)


def agility_coop(analysis: CoopAnalysis) -> AgilityReport:
    p1, p2 = analysis.p_fc_t1, analysis.p_fc_t2
    degenerate = p1 >= 1.0
    # a certain T1 leaves no T2 successes, so the literal 2/p_T2 term blows up
    literal = math.inf if degenerate and p2 <= 0.0 else coop_slots_literal(p1, p2)
    return AgilityReport(
        Strategy.CS,
        expected_slots=literal,
        renewal_slots=coop_slots_renewal(p1, p2),
        degenerate=degenerate,
    )


def agility_distributed(analysis: DistributedAnalysis) -> AgilityReport:
    floor = analysis.slots_per_iteration * analysis.k_iterations
    return AgilityReport(Strategy.DS, floor * expected_slots_geometric(analysis.p_d),
                         floor_slots=floor)


def path_hop_distance(n_nodes: int, log_base: float = math.e) -> float:
    """sqrt(log^2 N / N)."""
    if n_nodes < 2:
        raise ConfigError(f"path hop distance needs N >= 2, got N={n_nodes}")
    return abs(math.log(n_nodes, log_base)) / math.sqrt(n_nodes)


def relay_hop_distance(n_nodes: int) -> float:
    return n_nodes ** -0.5


def energy_noncoop(params: SystemParams) -> EnergyReport:
    eta = params.eta
    return EnergyReport(Strategy.NCS, eta * params.n_nodes, 1.0, eta, eta)


def energy_coop(params: SystemParams, snr: Snr) -> EnergyReport:
    if params.n_nodes % 2:
        raise ConfigError(f"cooperative pairing needs an even node count, got N={params.n_nodes}")
    eta, n = params.eta, params.n_nodes
    f1 = noncoop_node_detection(params, snr)
    total = (1.0 - f1) * eta * math.sqrt(n) + eta * n
    e_max = eta * relay_hop_distance(n) + eta
    return EnergyReport(Strategy.CS, total, 1.0 + relay_hop_distance(n), e_max, eta)


def energy_distributed(params: SystemParams, k_iterations: int | None = None) -> EnergyReport:
    if k_iterations is None:
        k_iterations = iteration_count(params)
    if k_iterations < 1:
        raise ConfigError(f"k_iterations must be positive, got {k_iterations}")
    eta, n, n_c = params.eta, params.n_nodes, params.n_clusters
    d = path_hop_distance(n, params.log_base)
    total = k_iterations * n * eta * d + k_iterations * n_c * eta
    return EnergyReport(Strategy.DS, total, 1.0 + 1.0 / d, eta * d + eta, eta * d)


def fairness_distributed_closed(n_nodes: int, log_base: float = math.e) -> float:
    """1 + sqrt(N) / log N."""
    return 1.0 + math.sqrt(n_nodes) / math.log(n_nodes, log_base)

