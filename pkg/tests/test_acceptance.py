"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary) and
then asserts.  The catalog pipelines are run once per module and shared.
"""
import time

import numpy as np
import pytest

from circleflow.cli.catalog import (CHAFEE2, DISSIPATIVITY, FORCED_CHAFEE, GRADIENT_FREE, HEAT,
                                    RECURSION_SUITE)
from circleflow.cli.runner import run_scenario
from circleflow.recursion_lab import appendix_trial

pytestmark = pytest.mark.slow


def timed(sc, audits=None):
    t0 = time.perf_counter()
    rep = run_scenario(sc, audits=audits)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def heat():
    return timed(HEAT)


@pytest.fixture(scope="module")
def chafee2():
    return timed(CHAFEE2)


@pytest.fixture(scope="module")
def forced():
    return timed(FORCED_CHAFEE)


def metrics(rep, name):
    a = rep.audit(name)
    assert a is not None, f"audit {name} missing from the report"
    return a.metrics


def test_1_heat_floquet_oracle(heat, verdict):
    rep, _ = heat
    m = metrics(rep, "floquet-oracle")
    runtime = rep.timings["floquet-oracle"]
    ok = (HEAT.n_points == 128 and HEAT.period_T == 0.5 and m["n_compared"] == 9
          and m["max_relative_error"] <= 1e-6 and runtime < 10)
    verdict(1, ok, f"9 multipliers, max rel err {m['max_relative_error']:.2e}, {runtime:.1f} s")
    assert ok


def level_counts_ok(m):
    out = []
    for label, t in m["targets"].items():
        counts = {int(j): v for j, v in t["zero_counts"].items()}
        out.append(t["passed"] and all(counts.get(j) == [2 * j] for j in range(5)))
    return bool(out) and all(out)


def test_2_ladder_zero_rigidity(heat, chafee2, forced, verdict):
    per = {name: level_counts_ok(metrics(run[0], "eigen-structure"))
           for name, run in (("heat", heat), ("chafee2", chafee2), ("forced-chafee", forced))}
    ok = all(per.values())
    verdict(2, ok, "z = 2j for j <= 4 on " + ", ".join(f"{k}:{v}" for k, v in per.items()))
    assert ok


def test_3_zero_monotonicity(forced, verdict):
    rep, _ = forced
    m = metrics(rep, "zero-monotonicity")
    runtime = rep.timings["zero-monotonicity"]
    ok = m["n_trajectories"] == 500 and m["strict_increases"] == 0 and runtime < 120
    verdict(3, ok, f"{m['n_trajectories']} trajectories, {m['strict_increases']} increases, "
                   f"{m['increases_at_non_simple_samples']} at non-simple samples, {runtime:.0f} s")
    assert ok


def odd_or_zero(indices):
    return all(i == 0 or i % 2 == 1 for i in indices)


def test_4_hyperbolic_rigidity(forced, chafee2, verdict):
    rep, _ = forced
    census = metrics(rep, "census")
    rig = metrics(rep, "hyperbolic-rigidity")
    defects = [r["homogeneity_defect"] for r in census["records"]]
    grad_free, _ = timed(GRADIENT_FREE, ("census", "hyperbolic-rigidity"))
    catalog_indices = [rig["indices"], metrics(chafee2[0], "hyperbolic-rigidity")["indices"],
                       metrics(grad_free, "hyperbolic-rigidity")["indices"]]
    ok = (len(census["records"]) == 3 and max(defects) < 1e-8 and sorted(rig["indices"]) == [0, 0, 3]
          and not rig["non_hyperbolic"] and all(odd_or_zero(ix) for ix in catalog_indices))
    verdict(4, ok, f"indices {rig['indices']}, max defect {max(defects):.1e}, "
                   f"catalog indices {catalog_indices}")
    assert ok


def test_5_index_drop_and_no_homoclinics(chafee2, forced, verdict):
    ok, notes = True, []
    for name, (rep, _) in (("chafee2", chafee2), ("forced-chafee", forced)):
        m = metrics(rep, "index-drop")
        conns = [c for c in m["connections"] if c["source"] != c["target"]]
        drops = all(c["passed"] and c["source_index"] > c["target_index"] for c in conns)
        sweep = [h for h in m["homoclinic_sweeps"] if h["source"] == 0]
        ok &= bool(conns) and drops and m["homoclinic_found"] == 0 and sweep[0]["shots"] == 64
        notes.append(f"{name}: {len(conns)} connections, {sweep[0]['shots']} homoclinic shots, "
                     f"{m['homoclinic_found']} found")
    verdict(5, ok, "; ".join(notes))
    assert ok


def test_6_zero_number_bounds(chafee2, forced, verdict):
    ok, notes = True, []
    for name, (rep, _) in (("chafee2", chafee2), ("forced-chafee", forced)):
        m = metrics(rep, "zero-bounds")
        along = m["along_connections"]
        ok &= bool(along) and all(a["passed"] and a["max_z"] == 0 for a in along)
        levels = m["stable_levels"]
        ok &= bool(levels) and all(
            lv["passed"] and all(v == [2 * int(j)] and 2 * int(j) > 3 for j, v in lv["counts"].items())
            for lv in levels)
        notes.append(f"{name}: max z along {[a['max_z'] for a in along]}, "
                     f"stable levels {levels[0]['counts'] if levels else None}")
    verdict(6, ok, "; ".join(notes))
    assert ok


def test_7_filtration(chafee2, verdict):
    m = metrics(chafee2[0], "filtration")
    seq = m["operator_convergence"]
    rates = [r for r in m["rates"] if r["k"] <= 3]
    za = m["zero_assertions"]
    ok = (len(seq) > 20 and seq[20] < 1e-4
          and len(rates) == 4 and all(r["classified"] == r["k"] and r["relative_error"] <= 1e-3 for r in rates)
          and all(za[d]["classified"] > 0 and not za[d]["violations"] for d in ("forward", "backward")))
    verdict(7, ok, f"distance at n=20 {seq[20]:.1e}, max rate err "
                   f"{max(r['relative_error'] for r in rates):.1e}, classified "
                   f"{za['forward']['classified']}+{za['backward']['classified']}, no violations")
    assert ok


def test_8_transversality(chafee2, verdict):
    m = metrics(chafee2[0], "transversality")
    conns = m["connections"]
    parts = m["partition_tests"]
    ok = (bool(conns) and all(c["verdict"] == "transversal" and c["codim_stable"] == 0 for c in conns)
          and bool(parts) and all(p["n_fast"] == 200 and p["n_slow"] == 200 and p["fast_max_z"] <= 2
                                  and p["slow_min_z"] >= 4 and not p["overlap"] for p in parts))
    verdict(8, ok, f"{len(conns)} connections transversal; fast max z {parts[0]['fast_max_z']}, "
                   f"slow min z {parts[0]['slow_min_z']}")
    assert ok


def test_9_morse_smale(chafee2, verdict):
    rep, runtime = chafee2
    m = metrics(rep, "morse-smale")
    om = metrics(rep, "omega-census")
    ok = (m["verdict"] == "yes" and m["n_fixed_points"] == 3 and om["n_seeds"] == 64
          and om["histogram"] == {"fixed_point": 64} and not om["unresolved"]
          and rep.exit_code(strict=True) == 0 and runtime < 600 and CHAFEE2.n_points == 64)
    verdict(9, ok, f"verdict {m['verdict']}, {om['n_seeds']} seeds resolved, full pipeline {runtime:.0f} s")
    assert ok


def brute_delta_geometric(S, G, ratio, lam, gap, direction, n_max=200, horizon=400):
    # R_k = G ratio^|k| so ||M R_k|| = ratio^|k| ||M G|| exactly; every offset is
    # kept (no truncation) and the inverse of U on range P is (S P + Q)^{-1} P
    Uinv = np.linalg.inv(S @ gap.P + gap.Q) @ gap.P
    slow, fast = [gap.Q / lam], [Uinv]
    for _ in range(horizon + n_max + 1):
        slow.append(gap.V @ slow[-1] / lam)
        fast.append(lam * Uinv @ fast[-1])
    a = [np.linalg.norm(M @ G, 2) for M in slow]
    b = [np.linalg.norm(M @ G, 2) for M in fast]
    ks = range(0, horizon) if direction == "forward" else range(-horizon, 0)
    ns = range(0, n_max + 1) if direction == "forward" else range(-n_max, 1)
    best = 0.0
    for n in ns:
        tot = 0.0
        for k in ks:
            tot += ratio ** abs(k) * (a[n - 1 - k] if k <= n - 1 else b[k - n])
        best = max(best, tot)
    return best


def test_10_recursion_suite(verdict):
    rep, runtime = timed(RECURSION_SUITE)
    m = metrics(rep, "recursion-suite")
    # replay the same trials from the same named stream for the brute-force sums
    rng = RECURSION_SUITE.rng("recursion-suite")
    trials = [appendix_trial(rng) for _ in range(100)]
    from circleflow.recursion_lab import spectral_projections
    worst = 0.0
    for t in trials:
        gap = spectral_projections(t.S_p, t.lam)
        for direction, fast in (("forward", t.delta_forward), ("backward", t.delta_backward)):
            slow = brute_delta_geometric(t.S_p, t.G, 0.8, t.lam, gap, direction)
            worst = max(worst, abs(fast - slow) / slow)
    ok = (m["n_trials"] == 100 and m["passed"] == 100 and m["max_rate_error"] <= 1e-3
          and sum(m["branches"].get(b, 0) for b in ("i", "ii")) == 100
          and m["dimension_matches_forward"] == 100 and m["dimension_matches_backward"] == 100
          and worst <= 1e-12 and runtime < 60)
    verdict(10, ok, f"{m['passed']}/100 trials, rate err {m['max_rate_error']:.1e}, branches "
                    f"{m['branches']}, delta vs brute force {worst:.1e}, {runtime:.0f} s")
    assert ok


def test_11_dissipativity(verdict):
    rep, _ = timed(DISSIPATIVITY)
    m = metrics(rep, "dissipativity")
    ok = (m["n_seeds"] == 50 and m["max_initial_sup"] <= 5 + 1e-12 and not m["failed_seeds"]
          and m["max_entry_time"] <= 20 and m["tol"] == 0.01 and m["min_zeta"] > 0)
    verdict(11, ok, f"{m['n_seeds']} seeds, last entry t = {m['max_entry_time']:.2f}, "
                    f"min zeta {m['min_zeta']:.2f}")
    assert ok


@pytest.mark.parametrize("sc", [HEAT, GRADIENT_FREE], ids=lambda s: s.name)
def test_12_determinism(sc, tmp_path, verdict):
    run_scenario(sc, out_dir=tmp_path / "a")
    run_scenario(sc, out_dir=tmp_path / "b", threads=2)
    same = (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    verdict(f"12 {sc.name}", same, "report.json identical across two runs")
    assert same
