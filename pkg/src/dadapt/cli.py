"""Command line front end.

Subcommands: run, grid, sweep-d0, verify, trace-toy. Exit codes: 0 on
success, 1 when a verification check fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import reports_to_csv
from .convex import run_convex
from .core import ConfigError
from .harness import (
    ExperimentConfig,
    apply_overrides,
    d0_sweep,
    grid_search,
    load_config,
    run_experiment,
    verify_suite,
    _csv_text,
    CSV_HEADER,
)
from .problems import abs_value_problem

__all__ = ["main"]


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, val = pair.partition("=")
        overrides[key.strip()] = val.strip()
    return overrides


def _config_from_args(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.set:
        config = apply_overrides(config, _parse_overrides(args.set))
    return config


def _floats(csv_arg: str) -> list[float]:
    try:
        return [float(tok) for tok in csv_arg.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated floats, got {csv_arg!r}") from None


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config)
    print(f"config {result.config_hash}: {len(result.outputs)} run(s) -> {result.out_dir}")
    for metric, (m, se2) in result.aggregate.items():
        print(f"  {metric}: {m:.6g} +/- {se2:.2g}")
    n_diverged = sum(out.summary["diverged"] for out in result.outputs)
    if n_diverged:
        print(f"  diverged runs: {n_diverged}")
    return 0


def _cmd_grid(args) -> int:
    config = _config_from_args(args)
    result = grid_search(config, _floats(args.lrs), compare_algorithm=args.compare)
    print("lr,mean_final_f,two_se,diverged")
    for lr, m, se2, diverged in result.rows:
        print(f"{lr!r},{m!r},{se2!r},{diverged}")
    print(f"best lr {result.best_lr!r} with mean final loss {result.best_f!r}")
    if result.compare_algorithm:
        print(f"{result.compare_algorithm} (no tuning): {result.compare_f!r}")
    print(f"table -> {result.out_path}")
    return 0


def _cmd_sweep_d0(args) -> int:
    config = _config_from_args(args)
    result = d0_sweep(config, _floats(args.d0s))
    print("d0,mean_final_f,two_se,out_of_theory")
    for d0, m, se2, flag in result.rows:
        print(f"{d0!r},{m!r},{se2!r},{flag}")
    print(f"relative spread of mean final loss: {result.relative_spread!r}")
    print(f"table -> {result.out_path}")
    return 0


def _cmd_verify(args) -> int:
    reports = verify_suite(args.suite, quick=not args.full)
    if args.inject_failure:
        # deliberate broken entry so the failure path itself can be exercised
        from .analysis import BoundReport

        reports.append(
            BoundReport(
                name="injected_failure",
                lhs=1.0,
                rhs=0.0,
                slack=-1.0,
                satisfied=False,
                context="doctored check, requested via --inject-failure",
            )
        )
    text = reports_to_csv(reports)
    if args.out:
        Path(args.out).write_text(text)
        print(f"report -> {args.out}")
    else:
        print(text, end="")
    n_failed = sum(1 for r in reports if not r.satisfied)
    n_skipped = sum(1 for r in reports if r.skipped)
    print(
        f"{len(reports)} checks: {len(reports) - n_failed - n_skipped} satisfied, "
        f"{n_skipped} skipped, {n_failed} failed",
        file=sys.stderr,
    )
    return 1 if n_failed else 0


def _cmd_trace_toy(args) -> int:
    prob = abs_value_problem()
    result = run_convex(
        prob, np.array([1.0]), algorithm="da", d0=0.1, n=args.steps, option="I"
    )
    rows = [
        (rec.k, rec.d, rec.dhat, rec.scale, rec.f, rec.gnorm2, 0.0)
        for rec in result.traj.records
    ]
    text = _csv_text(CSV_HEADER, rows)
    if args.out:
        Path(args.out).write_text(text)
        print(f"trace -> {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dadapt",
        description="Learning-rate-free convex optimization benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config across its seeds")
    p_run.add_argument("--config", help="path to a key = value config file")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_run.set_defaults(func=_cmd_run)

    p_grid = sub.add_parser("grid", help="step-size grid search for a baseline")
    p_grid.add_argument("--config", help="path to a key = value config file")
    p_grid.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_grid.add_argument("--lrs", required=True, help="comma-separated multipliers")
    p_grid.add_argument(
        "--compare",
        help="also run this adaptive algorithm on the same problem for comparison",
    )
    p_grid.set_defaults(func=_cmd_grid)

    p_sweep = sub.add_parser("sweep-d0", help="sensitivity sweep over the initial d")
    p_sweep.add_argument("--config", help="path to a key = value config file")
    p_sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_sweep.add_argument("--d0s", required=True, help="comma-separated initial estimates")
    p_sweep.set_defaults(func=_cmd_sweep_d0)

    p_verify = sub.add_parser("verify", help="run the numerical verification battery")
    p_verify.add_argument("--suite", default="all", choices=["lemmas", "bounds", "all"])
    p_verify.add_argument("--out", help="write the CSV report here instead of stdout")
    p_verify.add_argument("--full", action="store_true", help="larger, slower battery")
    p_verify.add_argument(
        "--inject-failure",
        action="store_true",
        help="append one doctored failing check (tests the exit code path)",
    )
    p_verify.set_defaults(func=_cmd_verify)

    p_toy = sub.add_parser("trace-toy", help="emit the 1-d absolute-value trace")
    p_toy.add_argument("--steps", type=int, default=100)
    p_toy.add_argument("--out", help="write the CSV trace here instead of stdout")
    p_toy.set_defaults(func=_cmd_trace_toy)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
