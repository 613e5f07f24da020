"""Declarative experiment configuration (TOML), validated strictly.

Unknown keys anywhere in the document are errors.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .distributed import DistributedConfig
from .model import ConfigError, SystemParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScenarioSection(_Strict):
    n_nodes: int = 20
    sigma_w2: float = 1.0
    alpha: float = 0.1
    primary_power: float = 1.0
    relay_power: float = 1.0
    relay_gain2: float = 1.0
    eta: float = 1.0
    n_clusters: int = 2
    grad_bound: float = 1.0
    theta_init: float = 0.0
    log_base: float = math.e


class DistributedSection(_Strict):
    common_node_threshold: float = 1.0
    step_size: Optional[float] = None
    schedule: Literal["constant", "diminishing"] = "diminishing"
    max_passes: int = 5


class SweepSection(_Strict):
    parameter: Literal["snr_db", "n_nodes", "alpha"] = "snr_db"
    grid: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None
    snr_db: float = 0.0
    strategies: List[Literal["NCS", "CS", "DS"]] = Field(default_factory=lambda: ["NCS", "CS", "DS"])
    quantities: List[Literal["detection", "agility", "energy"]] = Field(
        default_factory=lambda: ["detection", "agility", "energy"])
    validation: bool = False
    figures: List[Literal["fig2", "fig3", "fig4", "fig5"]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _grid_source(self):
        ranged = (self.start, self.stop, self.step)
        if self.grid is None and any(v is None for v in ranged):
            raise ValueError("sweep needs either 'grid' or all of 'start', 'stop', 'step'")
        if self.grid is not None and any(v is not None for v in ranged):
            raise ValueError("give either 'grid' or 'start'/'stop'/'step', not both")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        return self

    @field_validator("strategies", "quantities")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("must not be empty")
        if len(set(v)) != len(v):
            raise ValueError("duplicate entries")
        return v

    def resolved_grid(self) -> List[float]:
        if self.grid is not None:
            return [float(v) for v in self.grid]
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(count)]


class RunSection(_Strict):
    seed: int = 20080101
    n_trials: int = 100_000
    latency_trials: int = 20_000
    latency_slot_budget: float = 500.0

    @field_validator("seed")
    @classmethod
    def _u64(cls, v):
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator("n_trials", "latency_trials")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("must be positive")
        return v


class Table1Section(_Strict):
    low_snr_db: float = 0.0
    high_snr_db: float = 15.0
    snr_step_db: float = 1.0


class ExperimentConfig(_Strict):
    schema_version: int
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)
    distributed: DistributedSection = Field(default_factory=DistributedSection)
    sweep: SweepSection = Field(default_factory=lambda: SweepSection(start=-10, stop=20, step=1))
    run: RunSection = Field(default_factory=RunSection)
    table1: Table1Section = Field(default_factory=Table1Section)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; expected {SCHEMA_VERSION}")
        return v

    def system_params(self) -> SystemParams:
        return SystemParams(**self.scenario.model_dump())

    def distributed_config(self) -> DistributedConfig:
        return DistributedConfig(**self.distributed.model_dump())


def parse_config(data: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(data)
        cfg.system_params()
        cfg.distributed_config()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)
