"""Shipped scenarios."""
from __future__ import annotations

from .config import AuditSpec, DissipativitySpec, Scenario, SeedSpec


def _plan(*entries):
    out = []
    for e in entries:
        if isinstance(e, str):
            out.append(AuditSpec(e))
        else:
            name, params = e
            out.append(AuditSpec(name, params))
    return tuple(out)


HEAT = Scenario(
    name="heat",
    expression="0",
    period_T=0.5,
    n_points=128,
    dt=0.01,
    census_seeds=SeedSpec(0),
    audits=_plan(("floquet-oracle", {"tol": 1e-6, "k_max": 4}),
                 ("eigen-structure", {"at": "zero"})),
    description="pure diffusion; every multiplier is known in closed form",
)

CHAFEE2 = Scenario(
    name="chafee2",
    expression="2*u - u^3",
    period_T=1.0,
    n_points=64,
    dt=0.02,
    census_seeds=SeedSpec(20, "constant", 2.0),
    sample_seeds=SeedSpec(64, "fourier", 2.0),
    audits=_plan(("census", {"expected_count": 3}),
                 "eigen-structure",
                 ("hyperbolic-rigidity", {"expected_indices": [3, 0, 0]}),
                 "filtration",
                 ("index-drop", {"homoclinic_shots": 64, "expected_connections": 2}),
                 "zero-bounds",
                 ("transversality", {"n_samples": 200}),
                 "omega-census",
                 "morse-smale"),
    description="autonomous bistable reaction; 0 has index 3, +-sqrt(2) are stable",
)

FORCED_CHAFEE = Scenario(
    name="forced-chafee",
    expression="(2 + 0.5*cos(2*pi*t/T))*u - u^3",
    period_T=1.0,
    n_points=64,
    dt=0.02,
    census_seeds=SeedSpec(20, "constant", 2.0),
    sample_seeds=SeedSpec(64, "fourier", 2.0),
    audits=_plan(("census", {"expected_count": 3}),
                 "eigen-structure",
                 ("hyperbolic-rigidity", {"expected_indices": [3, 0, 0]}),
                 ("zero-monotonicity", {"n_traj": 500}),
                 ("index-drop", {"homoclinic_shots": 64, "expected_connections": 2}),
                 "zero-bounds"),
    description="time-periodic growth rate; fixed points of P are periodic solutions",
)

GRADIENT_FREE = Scenario(
    name="gradient-free",
    expression="u - u^3 + 0.1*p",
    period_T=1.0,
    n_points=64,
    dt=0.02,
    census_seeds=SeedSpec(20, "constant", 2.0),
    audits=_plan("census", "eigen-structure", "hyperbolic-rigidity"),
    description="advective term breaks the p -> -p symmetry; census and report only",
)

DISSIPATIVITY = Scenario(
    name="dissipativity",
    expression="-u^3 + 0.2*cos(2*pi*t/T)",
    period_T=1.0,
    n_points=64,
    dt=0.01,
    census_seeds=SeedSpec(0),
    sample_seeds=SeedSpec(50, "fourier-sup", 5.0),
    # y f(t, y, 0) < 0 needs |y|^3 > 0.2; the margin keeps the inequality strict
    dissipativity=DissipativitySpec(gamma=0.0, delta=0.2 ** (1 / 3) * (1 + 1e-6),
                                    eta_scale=1.0, eta_power=3.0),
    audits=_plan(("dissipativity", {"horizon": 20.0, "tol": 0.01})),
    description="cubic damping with periodic forcing; absorbing ball of radius delta",
)

RECURSION_SUITE = Scenario(
    name="recursion-suite",
    expression="0",
    period_T=1.0,
    n_points=16,
    dt=0.1,
    census_seeds=SeedSpec(0),
    audits=_plan(("recursion-suite", {"n_trials": 100})),
    description="random 8x8 gap matrices with geometrically decaying perturbations",
)

CATALOG = {sc.name: sc for sc in (HEAT, CHAFEE2, FORCED_CHAFEE, GRADIENT_FREE, DISSIPATIVITY,
                                  RECURSION_SUITE)}
