"""Run every catalog scenario (or the ones named) and write outputs under --out."""
import argparse
import sys
import time
from pathlib import Path

from circleflow.cli.catalog import CATALOG
from circleflow.cli.runner import run_scenario


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=sorted(CATALOG))
    ap.add_argument("--out", default="runs")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    worst = 0
    for name in args.names:
        t0 = time.perf_counter()
        rep = run_scenario(CATALOG[name], out_dir=Path(args.out) / name, threads=args.threads)
        for line in rep.summary_lines():
            print(line)
        print(f"  ({time.perf_counter() - t0:.1f} s, exit code {rep.exit_code()})")
        worst = max(worst, rep.exit_code())
    return worst


if __name__ == "__main__":
    sys.exit(main())
