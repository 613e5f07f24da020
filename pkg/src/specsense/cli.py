"""Command-line entry point.

Exit codes: 0 all checks pass, 1 validation mismatch or failed ordering
check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .experiment import (SweepSpec, emit_csv, emit_plot_script, run_sweep, table1_check,
                         validation_lines)
from .model import ConfigError, Snr, Strategy

log = logging.getLogger("specsense")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="TOML experiment config")
    common.add_argument("--seed", type=_u64, help="override run.seed")
    common.add_argument("--trials", type=_positive, help="override run.n_trials")
    common.add_argument("--format", choices=["csv"], default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="specsense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sweep = sub.add_parser("sweep", parents=[common], help="run a parameter sweep, write CSV")
    sweep.add_argument("--out", required=True, type=Path, help="output directory")
    sub.add_parser("validate", parents=[common], help="analytic vs Monte Carlo cross-check")
    sub.add_parser("table1", parents=[common], help="summary ordering checks")
    return parser


def spec_from_config(cfg: ExperimentConfig, validation: bool | None = None) -> SweepSpec:
    sw = cfg.sweep
    return SweepSpec(
        swept_parameter=sw.parameter,
        grid=sw.resolved_grid(),
        fixed=cfg.system_params(),
        distributed=cfg.distributed_config(),
        strategies=[Strategy(s) for s in sw.strategies],
        validation=sw.validation if validation is None else validation,
        n_trials=cfg.run.n_trials,
        snr=Snr.from_db(sw.snr_db),
        seed=cfg.run.seed,
        quantities=tuple(sw.quantities),
        latency_trials=cfg.run.latency_trials,
        latency_slot_budget=cfg.run.latency_slot_budget,
    )


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    run = cfg.run
    if args.seed is not None:
        run = run.model_copy(update={"seed": args.seed})
    if args.trials is not None:
        run = run.model_copy(update={"n_trials": args.trials})
    return cfg.model_copy(update={"run": run})


def _report_sweep(result) -> int:
    for line in validation_lines(result):
        print(line)
    if result.errors:
        return EXIT_CONFIG
    if result.mismatches:
        print(f"{len(result.mismatches)} analytic/simulation mismatch(es) beyond 3 standard errors")
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    result = run_sweep(spec_from_config(cfg))
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    csv_path = emit_csv(result, out / "sweep.csv")
    print(f"wrote {csv_path}")
    for fig in cfg.sweep.figures:
        script = emit_plot_script(result, fig, out / f"{fig}.gp", csv_path.name)
        print(f"wrote {script}")
    return _report_sweep(result)


def cmd_validate(cfg: ExperimentConfig, args) -> int:
    result = run_sweep(spec_from_config(cfg, validation=True))
    return _report_sweep(result)


def cmd_table1(cfg: ExperimentConfig, args) -> int:
    t = cfg.table1
    report = table1_check(cfg.system_params(), Snr.from_db(t.low_snr_db), Snr.from_db(t.high_snr_db),
                          [Strategy(s) for s in cfg.sweep.strategies], t.snr_step_db)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_MISMATCH


COMMANDS = {"sweep": cmd_sweep, "validate": cmd_validate, "table1": cmd_table1}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
