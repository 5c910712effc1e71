"""Audit registry: each audit maps a scenario context to an AuditResult.

Audits share expensive intermediate objects (census, connections, omega
census) through the context, which computes each of them once.  Results
carry JSON-ready metrics and columnar artifact tables.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..asymptotics import (LinearProblem, classify_fk, limit_spectrum,
                           operator_convergence_audit, zero_number_filtration_audit)
from ..errors import CircleflowError, DegenerateFunctionError, NonHyperbolicError
from ..floquet import (fixed_point_census, floquet_spectrum, newton_fixed_point,
                       verify_eigen_structure, verify_hyperbolic_rigidity)
from ..grid import CircleGrid, StateVector, l2_norm
from ..manifolds import (ShootParams, linear_partition_test, morse_smale_verdict,
                         omega_limit_census, shoot_sweep, stable_level_zero_bounds,
                         transversality_check, verify_index_drop, verify_zero_number_bounds)
from ..recursion_lab import appendix_trial
from ..stepper import StepperConfig, check_dissipativity, evolve_array, tangent_array
from ..zeroes import zero_history_arrays

STATUSES = ("pass", "fail", "inconclusive")


@dataclass
class AuditResult:
    name: str
    status: str
    metrics: dict = field(default_factory=dict)
    structural_violation: bool = False
    artifacts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}")

    def table(self, kind: str, label: str, columns, rows):
        self.artifacts.setdefault(kind, {})[label] = {
            "columns": list(columns), "rows": np.asarray(rows, dtype=float).reshape(-1, len(columns))}


def _status(ok: bool, inconclusive: bool = False) -> str:
    if inconclusive:
        return "inconclusive"
    return "pass" if ok else "fail"


class Context:
    """Lazily computed shared objects for one scenario run."""

    def __init__(self, scenario, threads: int = 1):
        self.sc = scenario
        self.threads = max(1, int(threads))
        self.grid = scenario.grid
        self.cfg = scenario.stepper
        self._cache = {}

    def cached(self, key, build: Callable):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def nl(self):
        return self.cached("nl", self.sc.nonlinearity)

    def pmap(self, fn, items):
        """Order-preserving map, threaded when threads > 1."""
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(fn, items))

    def census(self):
        def build():
            seeds = self.sc.census_seeds.draw(self.grid, self.sc.rng("census"))
            return fixed_point_census(self.nl, self.cfg, seeds)
        return self.cached("census", build)

    def sample_seeds(self, stream: str):
        return self.sc.sample_seeds.draw(self.grid, self.sc.rng(stream))

    def connections(self):
        """Searches from every positive-index hyperbolic point to every other
        hyperbolic point (any index), plus the homoclinic sweeps."""
        def build():
            census = self.census()
            spec = self.sc.audit("index-drop")
            shots = int(spec.get("homoclinic_shots", 64)) if spec else 64
            found, searches, homoclinic = [], [], []
            for i, src in enumerate(census):
                if not src.hyperbolic or src.morse_index < 1:
                    continue
                for j, tgt in enumerate(census):
                    if j == i or not tgt.hyperbolic:
                        continue
                    params = ShootParams(amplitudes=(1e-4,), n_directions=max(8, 2 * src.morse_index),
                                         seed=int(self.sc.rng("shoot", i, j).integers(2 ** 31)))
                    sweep = shoot_sweep(src, tgt, self.nl, self.cfg, params, stop_at_first=True)
                    conns = sweep.connections
                    searches.append({"source": i, "target": j, "shots": len(sweep.shots),
                                     "found": bool(conns)})
                    found.extend((i, j, c) for c in conns)
                params = ShootParams(amplitudes=(1e-4, 1e-3), n_directions=max(1, shots // 2),
                                     seed=int(self.sc.rng("homoclinic", i).integers(2 ** 31)))
                sweep = shoot_sweep(src, src, self.nl, self.cfg, params)
                outcomes = {}
                for s in sweep.shots:
                    outcomes[s.outcome] = outcomes.get(s.outcome, 0) + 1
                homoclinic.append({"source": i, "shots": len(sweep.shots),
                                   "connections": len(sweep.connections), "outcomes": outcomes})
                found.extend((i, i, c) for c in sweep.connections)
            return found, searches, homoclinic
        return self.cached("connections", build)

    def transversality(self):
        def build():
            return [transversality_check(c, seed=int(self.sc.rng("transversality", i, j).integers(2 ** 31)))
                    for i, j, c in self.connections()[0] if i != j]
        return self.cached("transversality", build)

    def omega(self):
        def build():
            spec = self.sc.audit("omega-census")
            n_transient = int(spec.get("n_transient", 40)) if spec else 40
            n_window = int(spec.get("n_window", 10)) if spec else 10
            seeds = self.sample_seeds("omega")
            census = self.census()
            parts = self.pmap(lambda s: omega_limit_census(self.nl, self.cfg, [s], n_transient,
                                                           n_window, census=census).entries[0],
                              seeds)
            for i, e in enumerate(parts):
                e.seed_index = i
            from ..manifolds import OmegaReport
            return OmegaReport(parts)
        return self.cached("omega", build)


# ----------------------------------------------------------------------------
# audits


def _record_summary(rec) -> dict:
    # the Morse index is only defined at hyperbolic points
    return {"mean": rec.mean_value, "residual": rec.residual,
            "morse_index": rec.morse_index if rec.hyperbolic else None,
            "n_outside_unit_circle": rec.morse_index,
            "hyperbolic": rec.hyperbolic, "hyperbolicity_margin": rec.hyperbolicity_margin,
            "homogeneity_defect": rec.homogeneity_defect,
            "moduli": [float(m) for m in rec.spectrum.moduli_ladder] if rec.spectrum else []}


def _spectrum_tables(res: AuditResult, label: str, spec):
    order = np.argsort(-np.abs(spec.multipliers), kind="stable")
    rows = [(i, abs(spec.multipliers[i]), spec.multipliers[i].real, spec.multipliers[i].imag,
             spec.arnoldi_residuals[i]) for i in order]
    res.table("spectrum", label, ("index", "modulus", "re", "im", "residual"), rows)
    lad = [(j, spec.moduli_ladder[spec.level_indices(j)[0]], spec.moduli_ladder[spec.level_indices(j)[-1]])
           for j in range(spec.resolved_levels)]
    res.table("ladder", label, ("level", "modulus_upper", "modulus_lower"), lad)


def audit_simulate(ctx: Context, spec) -> AuditResult:
    periods = int(spec.get("periods", 5))
    seeds = ctx.sample_seeds("simulate")
    u0 = (seeds[0] if seeds else ctx.grid.sample(lambda x: np.cos(x) + 0.5 * np.sin(2 * x))).values
    T = ctx.nl.period_T
    every = max(1, ctx.cfg.steps_per_period(T) // 10)
    res = AuditResult("simulate", "pass")
    try:
        _, samples = evolve_array(u0, ctx.nl, ctx.cfg, 0.0, periods * T, record_every=every)
    except CircleflowError as exc:
        res.status = "fail"
        res.metrics = {"error": str(exc)}
        return res
    def row(t, u):
        return (t, np.max(np.abs(u)), np.mean(u), l2_norm(StateVector(ctx.grid, u)))

    rows = [row(0.0, u0)] + [row(t, x[0]) for t, x in samples]
    res.table("trajectory", "seed0", ("time", "sup_norm", "mean", "l2_norm"), rows)
    final = samples[-1][1][0] if samples else u0
    res.metrics = {"periods": periods, "final_sup": float(np.max(np.abs(final))),
                   "final_mean": float(np.mean(final))}
    return res


def _fixpoint(ctx, spec):
    guess = ctx.grid.constant(float(spec.get("guess", 1.0)))
    return newton_fixed_point(guess, ctx.nl, ctx.cfg, k_max=int(spec.get("k_max", 4)))


def audit_fixpoint(ctx: Context, spec) -> AuditResult:
    rec = _fixpoint(ctx, spec)
    res = AuditResult("fixpoint", "pass", metrics=_record_summary(rec))
    res.metrics["newton_history"] = list(rec.newton_history)
    return res


def audit_floquet(ctx: Context, spec) -> AuditResult:
    rec = _fixpoint(ctx, spec)
    res = AuditResult("floquet", _status(True, rec.spectrum.partial), metrics=_record_summary(rec))
    _spectrum_tables(res, "fixpoint", rec.spectrum)
    return res


def audit_floquet_oracle(ctx: Context, spec) -> AuditResult:
    """Constant linear reaction d: multipliers exp((d - k^2) T), k = 0 once, k >= 1 twice."""
    k_max = int(spec.get("k_max", 4))
    d = float(spec.get("growth", 0.0))
    tol = float(spec.get("tol", 1e-6))
    base = ctx.grid.constant(float(spec.get("base", 0.0)))
    sp = floquet_spectrum(base, ctx.nl, ctx.cfg, k_max=k_max)
    T = ctx.nl.period_T
    ks = np.array([0] + [k for k in range(1, k_max + 1) for _ in (0, 1)])
    exact = np.exp((d - ks ** 2) * T)
    got = np.asarray(sp.moduli_ladder[:len(exact)])
    short = len(got) < len(exact)
    rel = np.abs(got / exact[:len(got)] - 1.0)
    imag = float(np.max(np.abs(np.imag(sp.multipliers[:len(got)])))) if len(got) else 0.0
    ok = not short and float(rel.max()) <= tol and imag <= tol
    res = AuditResult("floquet-oracle", _status(ok, short), metrics={
        "max_relative_error": float(rel.max()) if len(rel) else None, "max_imag": imag,
        "n_compared": int(len(got)), "tol": tol})
    res.structural_violation = False
    _spectrum_tables(res, "oracle", sp)
    return res


def audit_eigen_structure(ctx: Context, spec) -> AuditResult:
    levels_needed = int(spec.get("levels", 5))
    if spec.get("at", "census") == "zero":
        sp = floquet_spectrum(ctx.grid.zeros(), ctx.nl, ctx.cfg, k_max=levels_needed - 1)
        targets = [("zero", sp, None)]
    else:
        targets = [(f"fp{i}", r.spectrum, r.hyperbolic) for i, r in enumerate(ctx.census())]
    res = AuditResult("eigen-structure", "pass")
    per, ok, short = {}, True, False
    for label, sp, hyp in targets:
        rep = verify_eigen_structure(sp, hyperbolic=hyp)
        per[label] = {"passed": rep.passed, "levels": rep.metrics["levels"],
                      "zero_counts": {str(k): v for k, v in rep.metrics["zero_counts"].items()},
                      "failures": [str(f) for f in rep.failures]}
        ok &= rep.passed
        short |= rep.metrics["levels"] < levels_needed
        _spectrum_tables(res, label, sp)
    res.metrics = {"targets": per, "levels_required": levels_needed}
    res.status = _status(ok, ok and (short or not targets))
    res.structural_violation = not ok
    return res


def audit_census(ctx: Context, spec) -> AuditResult:
    census = ctx.census()
    res = AuditResult("census", "pass")
    res.metrics = {"records": [_record_summary(r) for r in census],
                   "seed_failures": [list(map(str, f)) for f in census.failures]}
    expected = spec.get("expected_count")
    if expected is not None:
        res.metrics["expected_count"] = int(expected)
        res.status = _status(len(census) == int(expected))
    for i, r in enumerate(census):
        _spectrum_tables(res, f"fp{i}", r.spectrum)
    return res


def audit_hyperbolic_rigidity(ctx: Context, spec) -> AuditResult:
    census = ctx.census()
    tol = float(spec.get("tol", 1e-8))
    res = AuditResult("hyperbolic-rigidity", "pass")
    per, structural, skipped = [], False, []
    for i, r in enumerate(census):
        if not r.hyperbolic:
            skipped.append(i)
            continue
        rep = verify_hyperbolic_rigidity(r, tol)
        structural |= rep.structural_violation
        per.append({"record": i, "passed": rep.passed, **rep.metrics,
                    "failures": [str(f) for f in rep.failures]})
    indices = sorted((r.morse_index for r in census if r.hyperbolic), reverse=True)
    res.metrics = {"records": per, "non_hyperbolic": skipped, "indices": indices}
    ok = not structural
    expected = spec.get("expected_indices")
    if expected is not None:
        res.metrics["expected_indices"] = sorted(expected, reverse=True)
        ok &= indices == sorted(expected, reverse=True) and not skipped
    res.status = _status(ok, not per)
    res.structural_violation = structural
    return res


def audit_zero_monotonicity(ctx: Context, spec) -> AuditResult:
    """Random tangent rows carried along random nonlinear backgrounds, zero
    counts sampled every T/10."""
    n_traj = int(spec.get("n_traj", 500))
    per_bg = int(spec.get("per_background", 10))
    periods = float(spec.get("periods", 2))
    modes = int(spec.get("modes", 8))
    amp = float(spec.get("amplitude", 2.0))
    T = ctx.nl.period_T
    cfg = ctx.cfg
    every = cfg.steps_per_period(T) // 10
    if every * 10 != cfg.steps_per_period(T):
        raise ValueError("steps per period must be a multiple of 10 for T/10 sampling")
    n_bg = -(-n_traj // per_bg)
    rng = ctx.sc.rng("zero-monotonicity")
    x = ctx.grid.nodes
    jobs = []
    left = n_traj
    for b in range(n_bg):
        m = min(per_bg, left)
        left -= m
        u0 = sum(rng.standard_normal() * np.cos(k * x + rng.uniform(0, 2 * np.pi)) / (1 + k)
                 for k in range(5))
        u0 = amp * u0 / np.max(np.abs(u0))
        V0 = np.array([sum(rng.standard_normal() * np.cos(k * x + rng.uniform(0, 2 * np.pi))
                           for k in range(modes + 1)) for _ in range(m)])
        jobs.append((u0, V0))

    def run(job):
        u0, V0 = job
        _, _, samples = tangent_array(u0, V0, ctx.nl, cfg, 0.0, periods * T, record_every=every)
        times = [0.0] + [t for t, _, _ in samples]
        out = []
        for r in range(V0.shape[0]):
            arrays = [V0[r]] + [V[r] for _, _, V in samples]
            try:
                out.append(zero_history_arrays(times, arrays))
            except DegenerateFunctionError as exc:
                out.append(exc)
        return out

    histories = [h for chunk in ctx.pmap(run, jobs) for h in chunk]
    degenerate = sum(isinstance(h, Exception) for h in histories)
    good = [h for h in histories if not isinstance(h, Exception)]
    violations = sum(len(h.unexplained_violations) for h in good)
    flagged = sum(len(h.flagged_violations) for h in good)
    drops = sum(int(h.counts[0].count - h.counts[-1].count) for h in good)
    res = AuditResult("zero-monotonicity", _status(violations == 0))
    res.structural_violation = violations > 0
    res.metrics = {"n_trajectories": n_traj, "samples_per_trajectory": int(10 * periods + 1),
                   "strict_increases": violations, "increases_at_non_simple_samples": flagged,
                   "degenerate_trajectories": degenerate, "total_drop": drops}
    for i, h in enumerate(good[:5]):
        res.table("zero-history", f"traj{i}", ("time", "count"),
                  [(t, c.count) for t, c in zip(h.times, h.counts)])
    return res


def audit_index_drop(ctx: Context, spec) -> AuditResult:
    found, searches, homoclinic = ctx.connections()
    census = ctx.census()
    reports = []
    structural = False
    for i, j, c in found:
        try:
            rep = verify_index_drop(c)
        except NonHyperbolicError as exc:
            reports.append({"source": i, "target": j, "passed": None, "note": str(exc)})
            continue
        structural |= rep.structural_violation
        reports.append({"source": i, "target": j, "passed": rep.passed,
                        "source_index": census[i].morse_index, "target_index": census[j].morse_index,
                        "failures": [str(f) for f in rep.failures]})
    n_homoclinic = sum(h["connections"] for h in homoclinic)
    res = AuditResult("index-drop", "pass")
    res.metrics = {"connections": reports, "searches": searches, "homoclinic_sweeps": homoclinic,
                   "homoclinic_found": n_homoclinic}
    expected = spec.get("expected_connections")
    ok = not structural and n_homoclinic == 0
    if expected is not None:
        res.metrics["expected_connections"] = int(expected)
        ok &= sum(1 for i, j, _ in found if i != j) == int(expected)
    res.status = _status(ok, not searches and not homoclinic)
    res.structural_violation = structural or n_homoclinic > 0
    for k, (i, j, c) in enumerate(found):
        res.table("distance-history", f"conn{k}_{i}to{j}", ("iterate", "distance"),
                  list(enumerate(c.distance_history)))
    return res


def audit_zero_bounds(ctx: Context, spec) -> AuditResult:
    found, _, _ = ctx.connections()
    census = ctx.census()
    res = AuditResult("zero-bounds", "pass")
    along, ok = [], True
    for k, (i, j, c) in enumerate(found):
        rep = verify_zero_number_bounds(c)
        ok &= rep.passed
        along.append({"source": i, "target": j, "passed": rep.passed,
                      "max_z": max(rep.metrics["counts"], default=None),
                      "n_checked": len(rep.metrics["counts"]),
                      "skipped_degenerate": len(rep.metrics["skipped_degenerate"]),
                      "failures": [str(f) for f in rep.failures]})
        counts = [(n * ctx.nl.period_T, z.count) for n, z in enumerate(c.zero_history_of_difference)
                  if z is not None]
        res.table("zero-history", f"conn{k}_difference", ("time", "count"), counts)
    surrogate = []
    n_samples = int(spec.get("n_samples", 50))
    for i, r in enumerate(census):
        if not r.hyperbolic or r.morse_index < 1:
            continue
        rep = stable_level_zero_bounds(r, n_samples, seed=int(ctx.sc.rng("stable-levels", i).integers(2 ** 31)))
        ok &= rep.passed
        surrogate.append({"record": i, "passed": rep.passed,
                          "counts": {str(k): v for k, v in rep.metrics["counts"].items()},
                          "failures": [str(f) for f in rep.failures]})
    res.metrics = {"along_connections": along, "stable_levels": surrogate}
    res.status = _status(ok, not along and not surrogate)
    res.structural_violation = not ok
    return res


def audit_transversality(ctx: Context, spec) -> AuditResult:
    reports = ctx.transversality()
    census = ctx.census()
    conns = [(i, j) for i, j, _ in ctx.connections()[0] if i != j]
    res = AuditResult("transversality", "pass")
    per, ok, unsure = [], True, False
    for (i, j), t in zip(conns, reports):
        per.append({"source": i, "target": j, "verdict": t.verdict, "codim_stable": t.codim_stable,
                    "dim_subframe": t.dim_subframe, "notes": t.notes})
        ok &= t.verdict != "not-transversal"
        unsure |= t.verdict == "inconclusive"
    partitions = []
    n_samples = int(spec.get("n_samples", 200))
    for i, r in enumerate(census):
        if not r.hyperbolic or r.morse_index < 1 or r.morse_index % 2 == 0:
            continue
        rep = linear_partition_test(r, ctx.nl, ctx.cfg, n_samples=n_samples,
                                    seed=int(ctx.sc.rng("partition", i).integers(2 ** 31)))
        ok &= rep.passed
        partitions.append({"record": i, "passed": rep.passed, **rep.metrics,
                           "failures": [str(f) for f in rep.failures]})
    res.metrics = {"connections": per, "partition_tests": partitions}
    res.status = _status(ok, ok and (unsure or (not per and not partitions)))
    res.structural_violation = not ok
    return res


def audit_omega_census(ctx: Context, spec) -> AuditResult:
    om = ctx.omega()
    res = AuditResult("omega-census", _status(om.all_resolved))
    res.metrics = {"histogram": om.histogram, "n_seeds": len(om.entries),
                   "targets": [e.target for e in om.entries],
                   "unresolved": [{"seed": e.seed_index, "note": e.note, "distance": e.distance}
                                  for e in om.entries if e.outcome != "fixed_point"]}
    return res


def audit_morse_smale(ctx: Context, spec) -> AuditResult:
    census = ctx.census()
    conns = [c for i, j, c in ctx.connections()[0] if i != j]
    ms = morse_smale_verdict(census, conns, ctx.omega(), ctx.transversality())
    expected = spec.get("expected", "yes")
    status = {"yes": "pass", "no": "fail", "inconclusive": "inconclusive"}[ms.verdict]
    if expected != "yes":
        status = _status(ms.verdict == expected, ms.verdict == "inconclusive")
    res = AuditResult("morse-smale", status, metrics={
        "verdict": ms.verdict, "reasons": ms.reasons, "n_fixed_points": ms.n_fixed_points,
        "n_connections": ms.n_connections, "expected": expected, "notes": ms.notes})
    return res


def _synthetic(defect: Callable, coupled: Callable | None, T: float):
    two = lambda t, x: 2.0 + 0.0 * x       # noqa: E731
    zero = lambda t, x: 0.0 * x            # noqa: E731
    c = coupled or zero
    return LinearProblem(c, lambda t, x: 2.0 + defect(t, x), zero, two, T)


def audit_filtration(ctx: Context, spec) -> AuditResult:
    """Synthetic v_t = v_xx + c v_x + d v with coefficients tending to (0, 2)."""
    grid = CircleGrid(int(spec.get("n_points", 32)))
    conv_tol = float(spec.get("convergence_tol", 1e-4))
    rate_tol = float(spec.get("rate_tol", 1e-3))
    n_conv = int(spec.get("n_convergence", 20))
    per_k = int(spec.get("samples_per_k", 5))
    res = AuditResult("filtration", "pass")
    # operator convergence for an e^{-t} defect
    Ta = 0.5
    lp = _synthetic(lambda t, x: np.exp(-t) + 0 * x, None, Ta)
    seq = operator_convergence_audit(lp, StepperConfig(Ta / 10, scheme="etdrk4"), n_conv, grid=grid)
    conv_ok = min(seq) < conv_tol
    # rates against the exact ladder exp((2 - k^2) T)
    Tb = 0.1
    cfg_b = StepperConfig(Tb / 10, scheme="etdrk4")
    lp = _synthetic(lambda t, x: 0.01 * np.exp(-t) + 0 * x, None, Tb)
    spec_b = limit_spectrum(lp, cfg_b, grid, k_max=4)
    rates = []
    for k in range(int(spec.get("k_rates", 3)) + 1):
        fc = classify_fk(lp, cfg_b, grid.sample(lambda x: np.cos(k * x + 0.3)), spec_b, n_max=24)
        exact = np.exp((2 - k * k) * Tb)
        rates.append({"k": k, "classified": fc.k, "rate": fc.rate,
                      "relative_error": abs(fc.rate / exact - 1.0)})
    rate_ok = all(r["classified"] == r["k"] and r["relative_error"] <= rate_tol for r in rates)
    # zero-number assertions on both filtrations, with space-dependent defects
    Tc = 0.5
    cfg_c = StepperConfig(Tc / 10, scheme="etdrk4")
    spec_c = limit_spectrum(_synthetic(lambda t, x: 0 * x, None, Tc), cfg_c, grid, k_max=4)
    rng = ctx.sc.rng("filtration")
    x = grid.nodes
    samples = []
    for k in range(4):
        for _ in range(per_k):
            samples.append(StateVector(grid, sum(rng.standard_normal() * np.cos(j * x + rng.uniform(0, 2 * np.pi))
                                                 / (1 + j) for j in range(k, 6))))
    fwd = _synthetic(lambda t, x: 0.01 * np.exp(-t) * np.cos(x),
                     lambda t, x: 0.01 * np.exp(-t) * np.sin(x), Tc)
    bwd = _synthetic(lambda t, x: 0.01 * np.exp(t) * np.cos(x),
                     lambda t, x: 0.01 * np.exp(t) * np.sin(x), Tc)
    audits = {"forward": zero_number_filtration_audit(fwd, cfg_c, samples, spec_c, "forward", n_max=24),
              "backward": zero_number_filtration_audit(bwd, cfg_c, samples, spec_c, "backward", n_max=24)}
    z_ok = all(a.passed for a in audits.values())
    n_classified = sum(len(a.classified) for a in audits.values())
    res.metrics = {
        "operator_convergence": list(seq), "convergence_tol": conv_tol, "convergence_ok": conv_ok,
        "rates": rates, "rate_tol": rate_tol, "rates_ok": rate_ok,
        "zero_assertions": {d: {"classified": len(a.classified), "violations": a.violations,
                                "unclassifiable": len(a.unclassifiable),
                                "k_values": sorted({c[1] for c in a.classified})}
                            for d, a in audits.items()}}
    res.status = _status(conv_ok and rate_ok and z_ok, n_classified == 0)
    res.structural_violation = not z_ok
    res.table("ladder", "limit_T0.1", ("level", "modulus_upper", "modulus_lower"),
              [(j, spec_b.level_modulus(j), spec_b.moduli_ladder[spec_b.level_indices(j)[-1]])
               for j in range(spec_b.resolved_levels)])
    return res


def audit_dissipativity(ctx: Context, spec) -> AuditResult:
    seeds = ctx.sample_seeds("dissipativity")
    horizon = float(spec.get("horizon", 20.0))
    tol = float(spec.get("tol", 0.01))
    rep = check_dissipativity(ctx.nl, ctx.cfg, seeds, horizon, tol=tol,
                              sample_every=int(spec.get("sample_every", 5)),
                              cross_check=bool(spec.get("cross_check", True)))
    res = AuditResult("dissipativity", "pass")
    if rep.hypothesis_violated:
        res.status = "inconclusive"
        res.metrics = {"hypothesis_notes": rep.hypothesis_notes}
        return res
    env = rep.seeds
    res.metrics = {
        "delta": rep.delta, "tol": tol, "horizon": horizon, "n_seeds": len(env),
        "max_initial_sup": max(float(s.sup_norms[0]) for s in env),
        "min_zeta": rep.min_zeta, "max_entry_time": max(s.entry_time for s in env),
        "max_final_sup": max(s.final_sup for s in env),
        "R": env[0].R if env else None, "max_R_needed": max(s.R_needed for s in env),
        "envelope_bound_violations": rep.bound_violations,
        "max_resolution_gap": max(s.resolution_gap for s in env),
        "failed_seeds": [i for i, s in enumerate(env) if not s.passed], "notes": rep.hypothesis_notes}
    res.status = _status(bool(rep.passed))
    res.structural_violation = not rep.passed
    for i, s in enumerate(env):
        res.table("trajectory", f"envelope{i}", ("time", "sup_norm"), np.column_stack([s.times, s.sup_norms]))
    return res


def audit_recursion_suite(ctx: Context, spec) -> AuditResult:
    n = int(spec.get("n_trials", 100))
    rng = ctx.sc.rng("recursion-suite")
    trials = [appendix_trial(rng) for _ in range(n)]
    passed = sum(t.passed for t in trials)
    branches = {}
    for t in trials:
        branches[t.branch] = branches.get(t.branch, 0) + 1
    res = AuditResult("recursion-suite", _status(passed == n))
    res.metrics = {
        "n_trials": n, "passed": passed, "max_rate_error": max(t.rate_error for t in trials),
        "branches": branches, "redraws": sum(t.rejected for t in trials),
        "max_delta": max(max(t.delta_forward, t.delta_backward) for t in trials),
        "dimension_matches_forward": sum(t.forward.dim == t.forward.expected for t in trials),
        "dimension_matches_backward": sum(t.backward.dim == t.backward.expected for t in trials),
        "failed_trials": [i for i, t in enumerate(trials) if not t.passed]}
    res.structural_violation = passed < n
    return res


AUDITS = {
    "simulate": audit_simulate,
    "fixpoint": audit_fixpoint,
    "floquet": audit_floquet,
    "floquet-oracle": audit_floquet_oracle,
    "eigen-structure": audit_eigen_structure,
    "census": audit_census,
    "hyperbolic-rigidity": audit_hyperbolic_rigidity,
    "zero-monotonicity": audit_zero_monotonicity,
    "index-drop": audit_index_drop,
    "zero-bounds": audit_zero_bounds,
    "transversality": audit_transversality,
    "omega-census": audit_omega_census,
    "morse-smale": audit_morse_smale,
    "filtration": audit_filtration,
    "dissipativity": audit_dissipativity,
    "recursion-suite": audit_recursion_suite,
}
