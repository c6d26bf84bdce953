"""Command-line front end.

    ecasim simulate experiment.ini --out results.csv
    ecasim bounds --n-max 64 --format csv
"""
import argparse
import dataclasses
import json
import sys

from .bounds import bound_curves
from .config import ConfigError, parse_config
from .engine import Engine
from .runner import failed_cells, results_csv, results_json, run_matrix


def _write(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _trace_simulate(matrix, out) -> int:
    """Single-cell per-slot trace, meant for short debugging runs."""
    cells = list(matrix.cells())
    if len(cells) != 1:
        print("--trace requires a config without sweeps", file=sys.stderr)
        return 2
    _, config = cells[0]
    engine = Engine(dataclasses.replace(config, trace=True))
    engine.run()
    lines = []
    for t, kind, nodes, duration in engine.slot_log:
        lines.append(f"t={t} kind={kind} nodes={nodes} dur={duration}")
    report = engine.report()
    lines.append("throughput_bps=%.10g" % report.throughput_bps)
    _write("\n".join(lines) + "\n", out)
    return 0


def cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            matrix = parse_config(fh.read())
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None or args.runs is not None:
        base = matrix.base
        if args.seed is not None:
            base = dataclasses.replace(base, seed=args.seed)
        if args.runs is not None:
            base = dataclasses.replace(base, runs=args.runs)
        matrix = type(matrix)(base=base, variant=matrix.variant,
                              ca_fraction=matrix.ca_fraction,
                              sweeps=matrix.sweeps)
    if args.trace:
        return _trace_simulate(matrix, args.out)
    results = run_matrix(matrix, workers=args.workers)
    if args.format == "json":
        _write(results_json(results), args.out)
    else:
        _write(results_csv(results), args.out)
    failures = failed_cells(results)
    for failure in failures:
        print(f"cell {failure.overrides} failed: {failure.error}",
              file=sys.stderr)
    return 1 if failures else 0


def cmd_bounds(args) -> int:
    if args.n_max < 1:
        print("--n-max must be at least 1", file=sys.stderr)
        return 2
    curves = bound_curves(range(1, args.n_max + 1))
    if args.format == "json":
        payload = [{"n": b.n, "lower_bps": b.lower_bps,
                    "upper_bps": b.upper_bps, "max_agg_bps": b.max_agg_bps,
                    "k": b.k, "c": b.c, "h": b.h, "h_clamped": b.h_clamped}
                   for b in curves]
        _write(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        lines = ["n,lower_bps,upper_bps,max_agg_bps"]
        for b in curves:
            lines.append("%d,%.10g,%.10g,%.10g"
                         % (b.n, b.lower_bps, b.upper_bps, b.max_agg_bps))
        _write("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecasim",
        description="Slot-level WLAN contention simulator and bounds tool")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment config")
    sim.add_argument("config", help="INI experiment description")
    sim.add_argument("--seed", type=int, default=None,
                     help="override the base seed")
    sim.add_argument("--runs", type=int, default=None,
                     help="override the replication count")
    sim.add_argument("--out", default=None, help="output path (default stdout)")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--workers", type=int, default=1,
                     help="parallel worker processes")
    sim.add_argument("--trace", action="store_true",
                     help="per-slot log instead of metrics (single cell)")
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bounds", help="analytic throughput bounds")
    bnd.add_argument("--n-max", type=int, required=True,
                     help="largest network size, curves cover 1..N")
    bnd.add_argument("--out", default=None, help="output path (default stdout)")
    bnd.add_argument("--format", choices=("csv", "json"), default="csv")
    bnd.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
