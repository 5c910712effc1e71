"""Command line entry point: ``circleflow <subcommand> --scenario NAME|FILE ...``.

Exit codes: 0 all audits pass, 1 an audit failed without contradicting a
structural prediction, 2 structural violation, 3 inconclusive under
--strict, 4 infrastructure error.
"""
from __future__ import annotations

import argparse
import sys

from .config import load_scenario
from .runner import PLOT_KINDS, emit_plot_data, run_scenario

# subcommand -> audit bundle; None means the scenario's own plan
SUBCOMMANDS = {
    "simulate": ("simulate",),
    "fixpoint": ("fixpoint",),
    "floquet": ("floquet",),
    "census": ("census", "hyperbolic-rigidity"),
    "connect": ("index-drop", "zero-bounds"),
    "transversality": ("transversality",),
    "omega-census": ("omega-census",),
    "asymptotics-audit": ("filtration",),
    "recursion-lab": ("recursion-suite",),
    "report": None,
}

EXIT_INFRASTRUCTURE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circleflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="catalog name or TOML config file")
        p.add_argument("--out", default=None, help="output directory for report and data files")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=None, help="override the scenario RNG seed")
        p.add_argument("--resolution", type=int, default=None, help="override the grid size N")
        p.add_argument("--strict", action="store_true", help="inconclusive audits give exit code 3")
        p.add_argument("--plot", action="append", default=[], choices=PLOT_KINDS,
                       help="also write this plot-data kind (needs --out); repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ValueError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ValueError("--threads must be at least 1")
        sc = load_scenario(args.scenario).with_overrides(seed=args.seed, resolution=args.resolution)
        report = run_scenario(sc, out_dir=args.out, threads=args.threads,
                              audits=SUBCOMMANDS[args.command])
        if args.plot and args.out is None:
            raise ValueError("--plot needs --out")
        for kind in args.plot:
            emit_plot_data(report, kind, args.out)
    except Exception as exc:  # infrastructure: bad config, I/O, unexpected errors
        print(f"circleflow: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFRASTRUCTURE
    for line in report.summary_lines():
        print(line)
    return report.exit_code(strict=args.strict)


if __name__ == "__main__":
    sys.exit(main())
