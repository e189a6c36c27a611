"""Command line front end.

Subcommands:
  run CONFIG        run the experiment grid described by a YAML config
  sweep CONFIG      same grid repeated over --lambda-grid, with
                    validation-Winkler selection tables
  figures DIR       rebuild fig1.csv / fig2.csv from a results directory
  check             fast internal consistency battery

Exit codes: 0 success, 1 bad usage or config, 2 finished with per-run
failures (see failures.csv in the output directory) or failed checks.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError
from .experiment import emit_figure_data, load_config, run_experiment
from .selfcheck import run_all


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hessband",
        description="confidence bands for small neural regressors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="YAML config path")
    run_p.add_argument(
        "--out-dir", default=None,
        help="output directory (default: results/<config name>)",
    )

    sweep_p = sub.add_parser("sweep", help="run a config over a lambda grid")
    sweep_p.add_argument("config", help="YAML config path")
    sweep_p.add_argument(
        "--lambda-grid", required=True,
        help="comma-separated ridge strengths, e.g. 1e-6,1e-4,1e-2",
    )
    sweep_p.add_argument(
        "--out-dir", default=None,
        help="output directory (default: results/<config name>_sweep)",
    )

    fig_p = sub.add_parser("figures", help="rebuild figure CSVs from results")
    fig_p.add_argument("results_dir", help="directory holding results.csv and band CSVs")
    fig_p.add_argument(
        "--out-dir", default=None,
        help="where to write fig1.csv / fig2.csv (default: results_dir)",
    )

    sub.add_parser("check", help="run the internal consistency battery")
    return parser


def _parse_lambda_grid(raw: str) -> list[float]:
    grid: list[float] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = float(part)
        except ValueError:
            raise ConfigError(f"--lambda-grid entry {part!r} is not a number")
        if value < 0:
            raise ConfigError(f"--lambda-grid entry {part!r} must be >= 0")
        grid.append(value)
    if not grid:
        raise ConfigError("--lambda-grid is empty")
    return grid


def _cmd_run(args) -> int:
    config = load_config(args.config)
    out_dir = Path(args.out_dir) if args.out_dir else Path("results") / config.name
    result = run_experiment(config, out_dir)
    print(f"wrote {len(result.rows)} result rows to {result.results_path}")
    if result.failures:
        print(
            f"{len(result.failures)} runs failed; see {out_dir / 'failures.csv'}",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    grid = _parse_lambda_grid(args.lambda_grid)
    out_dir = (
        Path(args.out_dir) if args.out_dir else Path("results") / f"{config.name}_sweep"
    )
    result = run_experiment(config, out_dir, lambda_grid=grid)
    print(f"wrote {len(result.rows)} result rows to {result.results_path}")
    for method, lam, mean_w in result.selection:
        print(f"selected lambda for {method}: {lam} (mean val winkler {mean_w})")
    if result.failures:
        print(
            f"{len(result.failures)} runs failed; see {out_dir / 'failures.csv'}",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_figures(args) -> int:
    results_dir = Path(args.results_dir)
    if not results_dir.is_dir():
        raise ConfigError(f"results directory {results_dir} does not exist")
    warnings = emit_figure_data(results_dir, args.out_dir)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    out_dir = Path(args.out_dir) if args.out_dir else results_dir
    print(f"wrote {out_dir / 'fig1.csv'} and {out_dir / 'fig2.csv'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "figures":
            return _cmd_figures(args)
        if args.command == "check":
            return 0 if run_all() else 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
