"""delta(lambda, R) and bounded-solution dimensions as the perturbation grows.

One random gap matrix, R_n = s G 0.8^|n| for a range of s; reports where
delta crosses 1 and whether the bounded-space dimension still matches the
projector rank.
"""
import argparse

import numpy as np

from circleflow.errors import PreconditionError
from circleflow.recursion_lab import (bounded_solution_space, decaying_schedule, delta_lambda,
                                      random_gap_matrix, spectral_projections)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    S, _ = random_gap_matrix(rng)
    G = rng.standard_normal((8, 8))
    ev = np.abs(np.linalg.eigvals(S))
    lam = float(np.sqrt(ev[ev > 1].min() * ev[ev < 1].max()))
    gap = spectral_projections(S, lam)
    print(f"lambda = {lam:.4f}, rank P = {gap.rank_P}, rank Q = {gap.rank_Q}")
    print(f"{'scale':>8s} {'delta fwd':>10s} {'delta bwd':>10s} {'dim fwd':>8s} {'dim bwd':>8s}")
    for s in np.geomspace(1e-4, 1.0, 9):
        R = decaying_schedule(s * G, 0.8)
        df = delta_lambda(S, R, lam, gap)
        db = delta_lambda(S, R, lam, gap, direction="backward")
        dims = []
        for direction, d in (("forward", df), ("backward", db)):
            try:
                dims.append(str(bounded_solution_space(S, R, lam, gap, direction, delta=d).dim))
            except PreconditionError:
                dims.append("-")
        print(f"{s:8.1e} {df:10.4f} {db:10.4f} {dims[0]:>8s} {dims[1]:>8s}")


if __name__ == "__main__":
    main()
