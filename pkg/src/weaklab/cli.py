"""Command-line scenario runner.

Subcommands::

    weaklab run      SCENARIO [--out DIR] [--seed N] [--trials N]
                     [--grid-points N] [--eps LIST]
    weaklab sweep    SCENARIO PARAM VALUES [run options]
    weaklab deficit  SCENARIO [run options]
    weaklab mc       SCENARIO [run options]
    weaklab plot     CSV [--out DIR]

Exit codes: 0 success, 2 scenario parse error, 3 precondition violation,
4 numeric guard (grid support, trial caps, empty conditionals).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .errors import (
    DegeneratePostselectionError,
    DomainError,
    EmptyConditionalError,
    GridSupportError,
    LayoutError,
    ProtocolError,
    ResolutionError,
    ScenarioParseError,
    TagError,
    TrialCapError,
    UndefinedWeakValueError,
)
from .runner import execute_rows, write_outputs
from .scenario import SWEEPABLE_SLOTS, load_scenario, parse_complex

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_NUMERIC_GUARD = 4

_PRECONDITION_ERRORS = (
    DomainError,
    TagError,
    LayoutError,
    ProtocolError,
    UndefinedWeakValueError,
    DegeneratePostselectionError,
    ResolutionError,
)
_GUARD_ERRORS = (GridSupportError, TrialCapError, EmptyConditionalError)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="path to a scenario file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override the Monte Carlo seed")
    parser.add_argument("--trials", type=int, default=None, help="override the trial count")
    parser.add_argument("--grid-points", type=int, default=None, help="override the grid resolution")
    parser.add_argument("--eps", default=None, help="comma list overriding the coupling strengths")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaklab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute every pipeline a scenario declares")
    _add_run_options(run)

    sweep = sub.add_parser("sweep", help="sweep one parameter slot over explicit values")
    _add_run_options(sweep)
    sweep.add_argument("param", help=f"one of {', '.join(SWEEPABLE_SLOTS)}")
    sweep.add_argument("values", help="comma list of values (complex literals allowed for eta)")

    deficit = sub.add_parser("deficit", help="report measurement disturbance only")
    _add_run_options(deficit)

    mc = sub.add_parser("mc", help="Monte Carlo pipeline only")
    _add_run_options(mc)

    plot = sub.add_parser("plot", help="render convergence figures from a results CSV")
    plot.add_argument("csv", help="results CSV produced by run/sweep")
    plot.add_argument("--out", default="out", help="output directory for the figure")
    return parser


def _load_with_overrides(args) -> "ScenarioFile":
    sf = load_scenario(args.scenario)
    if args.seed is not None:
        sf = replace(sf, seed=args.seed)
    if args.trials is not None:
        sf = replace(sf, trials=args.trials)
    if args.eps is not None:
        eps = tuple(float(p) for p in args.eps.split(",") if p.strip())
        if not eps or any(e <= 0 for e in eps):
            raise ScenarioParseError("--eps must be a comma list of positive reals", field="eps")
        sf = replace(sf, eps_list=eps)
    return sf


def _command_string(args) -> str:
    return " ".join(sys.argv[1:]) if sys.argv[1:] else args.command


def _cmd_run(args) -> int:
    sf = _load_with_overrides(args)
    rows = execute_rows(sf, grid_points_override=args.grid_points)
    csv_path, manifest_path = write_outputs(sf, rows, args.out, _command_string(args))
    print(f"wrote {csv_path} and {manifest_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sf = _load_with_overrides(args)
    param = args.param.strip().lower()
    if param not in SWEEPABLE_SLOTS:
        raise ScenarioParseError(f"unknown parameter slot {param!r}", field="sweep")
    values = tuple(parse_complex(v, field="sweep") for v in args.values.split(",") if v.strip())
    if not values:
        raise ScenarioParseError("sweep needs at least one value", field="sweep")
    sf = replace(sf, sweep_param=param, sweep_values=values)
    rows = execute_rows(sf, grid_points_override=args.grid_points)
    csv_path, manifest_path = write_outputs(
        sf, rows, args.out, _command_string(args), extra={"sweep": f"{param}: {args.values}"}
    )
    print(f"wrote {csv_path} and {manifest_path}")
    return EXIT_OK


def _cmd_deficit(args) -> int:
    sf = _load_with_overrides(args)
    sf = replace(sf, trials=0, deficit=True)
    rows = execute_rows(sf, grid_points_override=args.grid_points)
    csv_path, manifest_path = write_outputs(sf, rows, args.out, _command_string(args))
    print(f"wrote {csv_path} and {manifest_path}")
    return EXIT_OK


def _cmd_mc(args) -> int:
    sf = _load_with_overrides(args)
    if sf.trials <= 0:
        raise ScenarioParseError("mc requires a positive trial count (file key or --trials)", field="trials")
    rows = execute_rows(sf, grid_points_override=args.grid_points)
    csv_path, manifest_path = write_outputs(sf, rows, args.out, _command_string(args))
    print(f"wrote {csv_path} and {manifest_path}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = []
    with open(args.csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    if not rows:
        raise ScenarioParseError("results CSV holds no rows", field="csv")

    name = rows[0]["name"]
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    by_sweep: dict[str, list[dict]] = {}
    for row in rows:
        by_sweep.setdefault(row["sweep_value"], []).append(row)
    for sweep_value, group in by_sweep.items():
        eps = [float(r["eps"]) for r in group]
        err = [abs(float(r["finite_eps"]) - float(r["analytic"])) for r in group]
        label = f"{rows[0]['sweep_param']}={sweep_value}" if sweep_value else "finite - limit"
        ax.loglog(eps, err, marker="o", label=label)
        mc = [(float(r["eps"]), float(r["mc_estimate"]), float(r["mc_stderr"]))
              for r in group if r["mc_estimate"]]
        if mc:
            ax.errorbar(
                [m[0] for m in mc],
                [abs(m[1] - float(group[0]["analytic"])) for m in mc],
                yerr=[m[2] for m in mc],
                fmt="x",
                alpha=0.7,
            )
    ax.set_xlabel("coupling strength")
    ax.set_ylabel("deviation from analytic limit")
    ax.set_title(name)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fig_path = out / f"{name}_convergence.png"
    fig.tight_layout()
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    print(f"wrote {fig_path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "deficit": _cmd_deficit,
        "mc": _cmd_mc,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _GUARD_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_GUARD
    except _PRECONDITION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
