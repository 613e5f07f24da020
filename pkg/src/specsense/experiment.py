"""Parameter sweeps, CSV output, gnuplot scripts and the summary-ordering check."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .coop import coop_fusion
from .distributed import DistributedConfig, distributed_analysis
from .metrics import (InfiniteAgilityError, agility_coop, agility_distributed, agility_noncoop,
                      coop_slots_renewal, energy_coop, energy_distributed, energy_noncoop)
from .model import ConfigError, Hypothesis, Snr, Strategy, SystemParams
from .montecarlo import (SimEstimate, TrialPlan, recommended_trials, simulate_coop_details,
                         simulate_detection, simulate_detection_latency, simulate_energy)
from .noncoop import noncoop_fusion

CSV_COLUMNS = (
    "grid_param", "grid_value", "strategy", "p_node", "p_fusion", "p_fusion_sim", "p_fusion_ci",
    "slots_paper", "slots_sim", "slots_ci", "energy_total", "energy_sim", "energy_ci",
    "fairness_mu",
)
QUANTITIES = ("detection", "agility", "energy")


@dataclass(frozen=True)
class SweepSpec:
    swept_parameter: str
    grid: Sequence[float]
    fixed: SystemParams
    distributed: DistributedConfig = field(default_factory=DistributedConfig)
    strategies: Sequence[Strategy] = (Strategy.NCS, Strategy.CS, Strategy.DS)
    validation: bool = False
    n_trials: int = 100_000
    snr: Snr = field(default_factory=lambda: Snr(1.0))
    seed: int = 0
    quantities: Sequence[str] = QUANTITIES
    latency_trials: int = 20_000
    latency_slot_budget: float = 500.0

    def __post_init__(self):
        if self.swept_parameter not in ("snr_db", "n_nodes", "alpha"):
            raise ConfigError(f"unknown swept parameter {self.swept_parameter!r}")
        if not len(self.grid):
            raise ConfigError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.quantities or any(q not in QUANTITIES for q in self.quantities):
            raise ConfigError(f"quantities must be a nonempty subset of {QUANTITIES}")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be positive")

    def point(self, value: float):
        """SystemParams and SNR at one grid value."""
        if self.swept_parameter == "snr_db":
            return self.fixed, Snr.from_db(value)
        if self.swept_parameter == "n_nodes":
            if value != int(value):
                raise ConfigError(f"n_nodes grid value {value} is not an integer")
            return replace(self.fixed, n_nodes=int(value)), self.snr
        return replace(self.fixed, alpha=value), self.snr


@dataclass
class SweepRow:
    grid_param: str
    grid_value: float
    strategy: str
    p_node: Optional[float] = None
    p_fusion: Optional[float] = None
    p_fusion_sim: Optional[float] = None
    p_fusion_ci: Optional[float] = None
    slots_paper: Optional[float] = None
    slots_sim: Optional[float] = None
    slots_ci: Optional[float] = None
    energy_total: Optional[float] = None
    energy_sim: Optional[float] = None
    energy_ci: Optional[float] = None
    fairness_mu: Optional[float] = None


@dataclass(frozen=True)
class Check:
    grid_value: float
    strategy: str
    quantity: str
    analytic: float
    simulated: float
    half_width: float
    z: float
    passed: bool
    informational: bool = False
    note: str = ""


@dataclass
class SweepResult:
    grid_param: str
    rows: List[SweepRow] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def column(self, name: str) -> List[Optional[float]]:
        return [getattr(r, name) for r in self.rows]

    def has_column(self, name: str) -> bool:
        return any(v is not None for v in self.column(name))

    @property
    def mismatches(self) -> List[Check]:
        return [c for c in self.checks if not c.passed and not c.informational]


def _point_seed(seed: int, index: int, strategy: Strategy) -> int:
    code = {Strategy.NCS: 0, Strategy.CS: 1, Strategy.DS: 2}[strategy]
    state = np.random.SeedSequence([seed, index, code]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def _safe_slots(fn, *args) -> float:
    try:
        return fn(*args)
    except InfiniteAgilityError:
        return math.inf


def _analytic_row(row: SweepRow, params: SystemParams, snr: Snr, strategy: Strategy,
                  quantities) -> dict:
    """Fill analytic columns; returns side values the validator needs."""
    side = {}
    if strategy == Strategy.NCS:
        a = noncoop_fusion(params, snr)
        row.p_node, row.p_fusion = a.p_node, a.p_fusion
        if "agility" in quantities:
            slots = _safe_slots(lambda: agility_noncoop(a).expected_slots)
            row.slots_paper = row.slots_sim = slots
        energy = energy_noncoop(params)
    elif strategy == Strategy.CS:
        a = coop_fusion(params, snr)
        row.p_node, row.p_fusion = a.p_node, a.p_fc_total
        side["coop"] = a
        if "agility" in quantities:
            try:
                report = agility_coop(a)
                row.slots_paper, row.slots_sim = report.expected_slots, report.renewal_slots
            except InfiniteAgilityError:
                row.slots_paper = math.inf
                row.slots_sim = _safe_slots(coop_slots_renewal, a.p_fc_t1, a.p_fc_t2)
        energy = energy_coop(params, snr)
    else:
        a = distributed_analysis(params, snr)
        row.p_fusion = a.p_d
        side["k"] = a.k_iterations
        if "agility" in quantities:
            slots = _safe_slots(lambda: agility_distributed(a).expected_slots)
            row.slots_paper = row.slots_sim = slots
        energy = energy_distributed(params, a.k_iterations)
    if "energy" in quantities:
        row.energy_total, row.fairness_mu = energy.total_energy, energy.fairness_mu
    if "detection" not in quantities:
        row.p_node = row.p_fusion = None
    return side


def _geometric_se(mean_slots: float, cost: float, n: int) -> float:
    """Standard error of a mean of `n` geometric latencies with `cost` slots per attempt."""
    p = min(cost / mean_slots, 1.0)
    return cost * math.sqrt((1.0 - p) / n) / p


def _compare(checks: list, value, strategy, quantity, analytic, est: SimEstimate,
             informational=False, note="", floor_se=0.0):
    z = est.z_score(analytic, floor_se)
    checks.append(Check(value, strategy.value, quantity, analytic, est.mean, est.half_width_95, z,
                        abs(z) <= 3.0, informational, note))


def _validate_row(spec: SweepSpec, result: SweepResult, row: SweepRow, index: int,
                  params: SystemParams, snr: Snr, strategy: Strategy, side: dict):
    seed = _point_seed(spec.seed, index, strategy)
    plan = TrialPlan(spec.n_trials, seed, Hypothesis.H1, strategy)
    value = row.grid_value
    cfg = spec.distributed
    if "detection" in spec.quantities:
        dplan = replace(plan, n_trials=recommended_trials(row.p_fusion, spec.n_trials))
        if strategy == Strategy.CS:
            details = simulate_coop_details(params, snr, dplan)
            est = details.p_fc_total
            a = side["coop"]
            _compare(result.checks, value, strategy, "p_fc_t1", a.p_fc_t1, details.p_fc_t1)
            _compare(result.checks, value, strategy, "n_prime", a.n_prime_rounded,
                     details.n_prime, informational=True,
                     note=f"analytic N'={a.n_prime:.6g} rounded to {a.n_prime_rounded}; "
                          "simulation uses the random failure count")
            if details.p_c_relayed.n_trials:
                _compare(result.checks, value, strategy, "p_c_relayed", a.p_c,
                         details.p_c_relayed, informational=True,
                         note="relayed T1 samples are conditioned on the relay's T1 miss")
        else:
            est = simulate_detection(params, snr, dplan, cfg)
        row.p_fusion_sim, row.p_fusion_ci = est.mean, est.half_width_95
        _compare(result.checks, value, strategy, "p_fusion", row.p_fusion, est)
    if "agility" in spec.quantities:
        expected = row.slots_sim
        if strategy == Strategy.CS and row.slots_paper is not None and math.isfinite(expected):
            rel = (row.slots_paper - expected) / expected
            result.checks.append(Check(
                value, strategy.value, "slots_literal_vs_renewal", row.slots_paper, expected, 0.0,
                math.nan, True, informational=True,
                note=f"FLAG: literal T_c differs from renewal T_c by {rel:+.2%}"))
        if expected is not None and expected <= spec.latency_slot_budget:
            lplan = replace(plan, n_trials=spec.latency_trials)
            est = simulate_detection_latency(params, snr, lplan, cfg)
            row.slots_sim, row.slots_ci = est.mean, est.half_width_95
            if est.censored:
                result.notes.append(f"{spec.swept_parameter}={value:g} {strategy.value}: "
                                    f"{est.censored} latency trials censored")
            cost = params.nodes_per_cluster * side["k"] if strategy == Strategy.DS else 1.0
            _compare(result.checks, value, strategy, "slots", expected, est,
                     floor_se=_geometric_se(expected, cost, est.n_trials))
        else:
            result.notes.append(f"{spec.swept_parameter}={value:g} {strategy.value}: latency "
                                f"simulation skipped (expected slots {expected:.4g} exceed "
                                f"budget {spec.latency_slot_budget:g})")
    if "energy" in spec.quantities:
        est = simulate_energy(params, snr, plan).total
        row.energy_sim, row.energy_ci = est.mean, est.half_width_95
        _compare(result.checks, value, strategy, "energy", row.energy_total, est)


def run_sweep(spec: SweepSpec) -> SweepResult:
    result = SweepResult(spec.swept_parameter)
    for index, value in enumerate(spec.grid):
        for strategy in spec.strategies:
            strategy = Strategy(strategy)
            row = SweepRow(spec.swept_parameter, float(value), strategy.value)
            result.rows.append(row)
            try:
                params, snr = spec.point(value)
                side = _analytic_row(row, params, snr, strategy, spec.quantities)
                if spec.validation:
                    _validate_row(spec, result, row, index, params, snr, strategy, side)
            except (ConfigError, ValueError, ArithmeticError, RuntimeError) as exc:
                result.errors.append(
                    f"{spec.swept_parameter}={value:g} {strategy.value}: {type(exc).__name__}: {exc}")
    return result


# --- CSV --------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.12g}"


def emit_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in result.rows:
                writer.writerow([_fmt(getattr(row, name)) for name in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc
    return path


def read_csv(path) -> SweepResult:
    path = Path(path)
    with path.open(newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        rows = []
        for record in reader:
            values = dict(zip(header, record))
            kwargs = {}
            for f in fields(SweepRow):
                raw = values[f.name]
                if f.name in ("grid_param", "strategy"):
                    kwargs[f.name] = raw
                else:
                    kwargs[f.name] = float(raw) if raw != "" else None
            rows.append(SweepRow(**kwargs))
    grid_param = rows[0].grid_param if rows else ""
    return SweepResult(grid_param, rows)


def rounded_rows(result: SweepResult) -> List[tuple]:
    """Rows with every float rounded to 12 significant digits, for comparisons."""
    out = []
    for row in result.rows:
        out.append(tuple(float(_fmt(v)) if isinstance(v, float) else v
                         for v in (getattr(row, n) for n in CSV_COLUMNS)))
    return out


# --- plot scripts -----------------------------------------------------------------

FIGURES = {
    "fig2": ("Average detection time", "Expected detection time (slots)",
             [("slots_paper", "literal"), ("slots_sim", "renewal/sim")], True),
    "fig3": ("Total energy consumption", "Total energy (energy units, eta = 1)",
             [("energy_total", "")], False),
    "fig4": ("Fairness of energy consumption", "Fairness degree mu = E_max / E_min",
             [("fairness_mu", "")], False),
    "fig5": ("Probability of detection at the fusion center", "Detection probability",
             [("p_fusion", "")], False),
}
X_LABELS = {"snr_db": "SNR (dB)", "n_nodes": "Number of nodes N",
            "alpha": "False-alarm probability alpha"}


class MissingColumnError(ValueError):
    pass


def emit_plot_script(result: SweepResult, figure: str, path, csv_path) -> Path:
    """Write a gnuplot script drawing `figure` from the CSV at `csv_path`."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {sorted(FIGURES)}")
    title, ylabel, series, logscale = FIGURES[figure]
    for column, _ in series[:1]:
        if not result.has_column(column):
            raise MissingColumnError(f"{figure} needs column '{column}', which the result lacks")
    strategies = list(dict.fromkeys(r.strategy for r in result.rows))
    path = Path(path)
    out_png = path.with_suffix(".png").name
    lines = [
        f"# {title}",
        "set datafile separator ','",
        "set terminal pngcairo size 800,600",
        f"set output '{out_png}'",
        f"set title '{title}'",
        f"set xlabel '{X_LABELS.get(result.grid_param, result.grid_param)}'",
        f"set ylabel '{ylabel}'",
        "set key outside right",
        "set grid",
    ]
    if logscale:
        lines.append("set logscale y")
    plots = []
    for column, label in series:
        if not result.has_column(column):
            continue
        col = CSV_COLUMNS.index(column) + 1
        for s in strategies:
            name = f"{s} {label}".strip()
            plots.append(f"'{csv_path}' every ::1 using 2:(strcol(3) eq '{s}' ? ${col} : NaN) "
                         f"with linespoints title '{name}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


# --- summary orderings ------------------------------------------------------------

@dataclass
class Table1Report:
    checks: List[tuple] = field(default_factory=list)
    notices: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self) -> List[str]:
        out = [f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}" for name, ok, detail in self.checks]
        return out + [f"[SKIP] {n}" for n in self.notices]


def _db_grid(low: float, high: float, step: float) -> List[float]:
    count = int(math.floor((high - low) / step + 1e-9)) + 1
    grid = [low + i * step for i in range(count)]
    if grid[-1] < high - 1e-9:
        grid.append(high)
    return grid


def table1_check(fixed: SystemParams, low_snr: Snr, high_snr: Snr,
                 strategies: Iterable[Strategy] = (Strategy.NCS, Strategy.CS, Strategy.DS),
                 snr_step_db: float = 1.0) -> Table1Report:
    """Evaluate the summary orderings (agility, fairness, energy, robustness, convergence)."""
    if fixed.n_nodes % 2 or fixed.n_nodes < 10:
        raise ConfigError(f"summary check needs even N >= 10, got N={fixed.n_nodes}")
    if not low_snr.linear < high_snr.linear:
        raise ConfigError("low SNR must be below high SNR")
    strategies = {Strategy(s) for s in strategies}
    report = Table1Report()
    if strategies != {Strategy.NCS, Strategy.CS, Strategy.DS}:
        report.notices.append("ordering checks need all three strategies; skipped "
                              f"(got {sorted(s.value for s in strategies)})")
        return report

    def fusion(snr):
        return (noncoop_fusion(fixed, snr), coop_fusion(fixed, snr),
                distributed_analysis(fixed, snr))

    nc_lo, cs_lo, ds_lo = fusion(low_snr)
    nc_hi, cs_hi, ds_hi = fusion(high_snr)

    t_nc = _safe_slots(lambda: agility_noncoop(nc_lo).expected_slots)
    t_c = _safe_slots(lambda: agility_coop(cs_lo).renewal_slots)
    t_d = _safe_slots(lambda: agility_distributed(ds_lo).expected_slots)
    report.checks.append((
        "agility: cooperative fastest", t_c < t_nc and t_c < t_d,
        f"T_c(renewal)={t_c:.6g}, T_nc={t_nc:.6g}, T_d={t_d:.6g} at {low_snr.db:g} dB"))

    mu_nc = energy_noncoop(fixed).fairness_mu
    mu_cs = energy_coop(fixed, low_snr).fairness_mu
    mu_ds = energy_distributed(fixed, ds_lo.k_iterations).fairness_mu
    report.checks.append((
        "fairness: non-cooperative best", mu_nc == 1.0 and 1.0 < mu_cs <= mu_ds,
        f"mu_NCS={mu_nc:.6g}, mu_CS={mu_cs:.6g}, mu_DS={mu_ds:.6g}"))

    e_nc = energy_noncoop(fixed).total_energy
    e_cs = energy_coop(fixed, low_snr).total_energy
    e_ds = energy_distributed(fixed, ds_lo.k_iterations).total_energy
    report.checks.append((
        "energy: distributed lowest at low SNR", e_ds < e_cs and e_ds < e_nc,
        f"E_DS={e_ds:.6g}, E_CS={e_cs:.6g}, E_NCS={e_nc:.6g} at {low_snr.db:g} dB"))

    swing_ds = abs(ds_lo.p_d - ds_hi.p_d)
    swing_nc = abs(nc_lo.p_fusion - nc_hi.p_fusion)
    ordered = ds_lo.p_d >= cs_lo.p_fc_total >= nc_lo.p_fusion
    report.checks.append((
        "robustness: distributed least sensitive to SNR", swing_ds < swing_nc and ordered,
        f"|dp_DS|={swing_ds:.6g}, |dp_NCS|={swing_nc:.6g}; at low SNR p_DS={ds_lo.p_d:.6g}, "
        f"p_CS={cs_lo.p_fc_total:.6g}, p_NCS={nc_lo.p_fusion:.6g}"))

    grid = _db_grid(low_snr.db, high_snr.db, snr_step_db)
    gaps = [coop_fusion(fixed, Snr.from_db(v)).p_fc_total - noncoop_fusion(fixed, Snr.from_db(v)).p_fusion
            for v in grid]
    rising = [(grid[i], grid[i + 1]) for i in range(len(gaps) - 1) if gaps[i + 1] > gaps[i]]
    detail = "gaps " + ", ".join(f"{v:g}dB:{g:.3g}" for v, g in zip(grid, gaps))
    if rising:
        detail += f"; increases on {', '.join(f'{a:g}->{b:g}' for a, b in rising)}"
    report.checks.append(("convergence: CS-NCS gap shrinks with SNR", not rising, detail))
    return report


# --- validation report ------------------------------------------------------------

def validation_lines(result: SweepResult) -> List[str]:
    lines = []
    for c in result.checks:
        if c.quantity == "slots_literal_vs_renewal":
            lines.append(f"[FLAG] {result.grid_param}={c.grid_value:g} {c.strategy} T_c literal="
                         f"{c.analytic:.6g} renewal={c.simulated:.6g}: {c.note}")
            continue
        tag = "INFO" if c.informational else ("PASS" if c.passed else "FAIL")
        line = (f"[{tag}] {result.grid_param}={c.grid_value:g} {c.strategy} {c.quantity}: "
                f"analytic={c.analytic:.6g} sim={c.simulated:.6g} +/-{c.half_width:.3g} "
                f"z={c.z:+.2f}")
        if c.note:
            line += f" ({c.note})"
        lines.append(line)
    lines += [f"[NOTE] {n}" for n in result.notes]
    lines += [f"[ERROR] {e}" for e in result.errors]
    return lines
