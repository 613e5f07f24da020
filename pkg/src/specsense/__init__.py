"""Analytic and Monte Carlo comparison of spectrum-sensing strategies for sensor networks."""

from .coop import CoopAnalysis, coop_fusion, coop_node2_detection, coop_threshold
from .distributed import (DistributedAnalysis, DistributedConfig, calibrate_false_alarm,
                          closed_form_estimate, distributed_detection_probability,
                          incremental_pass, iteration_count, node_gradient, objective)
from .metrics import (AgilityReport, EnergyReport, agility_coop, agility_distributed,
                      agility_noncoop, energy_coop, energy_distributed, energy_noncoop,
                      expected_slots_geometric)
from .model import (ChannelDraw, ConfigError, Hypothesis, Snr, Strategy, SystemParams,
                    energy_statistic, sample_channel)
from .montecarlo import (SimEstimate, TrialPlan, simulate_detection, simulate_detection_latency,
                         simulate_energy)
from .noncoop import NoncoopAnalysis, noncoop_fusion, noncoop_node_detection, noncoop_threshold
from .numerics import (binomial_tail_exceeds_half, erlang_survival, phi,
                       solve_monotone_decreasing)

__version__ = "0.1.0"
