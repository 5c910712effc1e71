"""Error of the heat multipliers against exp(-k^2 T) as dt is refined.

ETDRK4 is exact for the heat equation up to rounding; imex_bdf2 should show
second order.  Prints one row per (scheme, dt).
"""
import argparse

import numpy as np

from circleflow.floquet import floquet_spectrum
from circleflow.grid import CircleGrid
from circleflow.stepper import Nonlinearity, StepperConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--period", type=float, default=0.5)
    ap.add_argument("--k-max", type=int, default=4)
    args = ap.parse_args(argv)
    T = args.period
    nl = Nonlinearity(lambda t, y, z: 0 * y, lambda t, y, z: 0 * y, lambda t, y, z: 0 * y, T)
    ks = np.array([0] + [k for k in range(1, args.k_max + 1) for _ in (0, 1)])
    exact = np.exp(-ks ** 2 * T)
    print(f"{'scheme':>10s} {'dt':>10s} {'max rel err':>12s}")
    for scheme in ("etdrk4", "imex_bdf2"):
        for steps in (10, 20, 40, 80, 160):
            spec = floquet_spectrum(CircleGrid(args.n).zeros(), nl, StepperConfig(T / steps, scheme),
                                    k_max=args.k_max)
            err = np.max(np.abs(spec.moduli_ladder[:len(exact)] / exact - 1))
            print(f"{scheme:>10s} {T / steps:10.5f} {err:12.3e}")


if __name__ == "__main__":
    main()
