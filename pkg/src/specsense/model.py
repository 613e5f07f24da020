"""Scenario parameters, hypotheses and the Rayleigh/Gaussian signal model.

Complex Gaussians follow the tail convention P(|x|^2 > t) = exp(-t / (2 sigma^2)),
i.e. each real component has variance sigma^2 and |x|^2 is exponential with
mean 2 sigma^2. Every closed form in the package is derived from these tails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]


class ConfigError(ValueError):
    """Invalid scenario or experiment configuration."""


class Hypothesis(enum.IntEnum):
    H0 = 0
    H1 = 1

    @property
    def theta(self) -> int:
        return int(self)


class Strategy(str, enum.Enum):
    NCS = "NCS"
    CS = "CS"
    DS = "DS"


@dataclass(frozen=True)
class Snr:
    """Received signal-to-noise ratio sigma_h^2 / sigma_w^2 (linear)."""

    linear: float

    def __post_init__(self):
        if not (self.linear >= 0.0) or math.isinf(self.linear):
            raise ConfigError(f"SNR must be finite and nonnegative, got {self.linear!r}")

    @classmethod
    def from_db(cls, db: float) -> "Snr":
        return cls(10.0 ** (db / 10.0))

    @property
    def db(self) -> float:
        if self.linear == 0.0:
            return -math.inf
        return 10.0 * math.log10(self.linear)


@dataclass(frozen=True)
class SystemParams:
    n_nodes: int = 20
    sigma_h2: float = 1.0
    sigma_w2: float = 1.0
    alpha: float = 0.1
    primary_power: float = 1.0
    relay_power: float = 1.0
    relay_gain2: float = 1.0
    eta: float = 1.0
    n_clusters: int = 1
    grad_bound: float = 1.0
    theta_init: float = 0.0
    log_base: float = math.e

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise ConfigError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        for name in ("sigma_h2", "sigma_w2", "primary_power", "relay_power",
                     "relay_gain2", "eta", "grad_bound"):
            value = getattr(self, name)
            if not (value > 0.0) or math.isinf(value):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        if int(self.n_clusters) != self.n_clusters or self.n_clusters < 1:
            raise ConfigError(f"n_clusters must be a positive integer, got {self.n_clusters!r}")
        if self.n_nodes % self.n_clusters:
            raise ConfigError(
                f"n_clusters={self.n_clusters} does not divide n_nodes={self.n_nodes}")
        if not math.isfinite(self.theta_init):
            raise ConfigError("theta_init must be finite")
        if not (self.log_base > 0.0) or self.log_base == 1.0:
            raise ConfigError(f"log_base must be positive and != 1, got {self.log_base!r}")

    @property
    def snr(self) -> Snr:
        return Snr(self.sigma_h2 / self.sigma_w2)

    @property
    def nodes_per_cluster(self) -> int:
        return self.n_nodes // self.n_clusters

    def with_snr(self, snr: Snr) -> "SystemParams":
        """Copy with sigma_h2 set so that sigma_h2 / sigma_w2 equals `snr`.

        A zero SNR maps to the smallest positive channel variance so the
        parameter invariants still hold.
        """
        sigma_h2 = snr.linear * self.sigma_w2
        if sigma_h2 == 0.0:
            sigma_h2 = np.finfo(float).tiny
        return replace(self, sigma_h2=sigma_h2)


@dataclass(frozen=True)
class ChannelDraw:
    """One slot of primary-to-node gains, noise and received samples."""

    h_p: np.ndarray
    w: np.ndarray
    y: np.ndarray
    theta: int = field(default=0)

    def __post_init__(self):
        for arr in (self.h_p, self.w, self.y):
            arr.setflags(write=False)


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circular complex Gaussian with P(|x|^2 > t) = exp(-t / (2 variance))."""
    scale = math.sqrt(variance)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


def sample_channel(params: SystemParams, hyp: Hypothesis, rng_seed: SeedLike) -> ChannelDraw:
    rng = make_rng(rng_seed)
    n = params.n_nodes
    h_p = complex_gaussian(rng, n, params.sigma_h2)
    w = complex_gaussian(rng, n, params.sigma_w2)
    theta = Hypothesis(hyp).theta
    y = params.primary_power * theta * h_p + w
    return ChannelDraw(h_p=h_p, w=w, y=y, theta=theta)


def energy_statistic(y_i):
    """|y_i|^2; works elementwise on arrays."""
    return np.abs(y_i) ** 2 if isinstance(y_i, np.ndarray) else abs(complex(y_i)) ** 2
