"""Unstable frames, heteroclinic shooting and the connection audits.

Local unstable manifolds are seeded to first order, phi + eps * a with a in
the unstable eigenspace; the quadratic correction is below every tolerance
used here.  Stable tangent spaces are never built as sets: their codimension
is read from the target's ladder and membership is decided by forward growth
rates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .asymptotics import fit_rates, log_norm_records, match_level
from .errors import (BlowUpError, DegenerateFunctionError, NonHyperbolicError,
                     PreconditionError, UnclassifiableError)
from .floquet import ALPHA, DEDUP_RADIUS, AuditReport, FixedPointRecord
from .grid import StateVector, fractional_inner, fractional_norm_array, orthonormalize
from .stepper import Nonlinearity, StepperConfig, dp_apply_array, poincare_array, tangent_array
from .zeroes import DEFAULT_TOL, DEGENERATE_SUP, zero_count_array

CONNECTION_TOL = 1e-7
CONSECUTIVE = 5
FRAME_LABELS = ("unstable_at_source", "stable_at_target", "filtration_Fk")


@dataclass(frozen=True, eq=False)
class TangentFrame:
    base: StateVector
    vectors: list
    label: str = "unstable_at_source"

    def __post_init__(self):
        if self.label not in FRAME_LABELS:
            raise ValueError(f"unknown frame label {self.label!r}")

    @property
    def dimension(self) -> int:
        return len(self.vectors)

    def array(self) -> np.ndarray:
        return np.array([v.values for v in self.vectors])

    def gram(self, alpha: float = ALPHA) -> np.ndarray:
        A = self.array()
        return fractional_inner(A, A, alpha)

    def gram_determinant(self, alpha: float = ALPHA) -> float:
        return float(np.linalg.det(self.gram(alpha)))

    def span_residual(self, v: np.ndarray, alpha: float = ALPHA) -> float:
        """Relative distance of v from the span (Hilbert X^alpha)."""
        A = self.array()
        coef = np.linalg.solve(self.gram(alpha), fractional_inner(A, v, alpha)[:, 0])
        r = v - coef @ A
        return float(np.sqrt(fractional_inner(r, r, alpha)[0, 0] / fractional_inner(v, v, alpha)[0, 0]))


def make_frame(base: StateVector, rows: np.ndarray, label: str, alpha: float = ALPHA) -> TangentFrame:
    Q, R = orthonormalize(rows, alpha)
    if np.min(np.abs(np.diag(R))) < 1e-10 * max(np.max(np.abs(np.diag(R))), 1e-300):
        raise ValueError("frame vectors are linearly dependent")
    return TangentFrame(base, [StateVector(base.grid, q) for q in Q], label)


def _require_hyperbolic(rec: FixedPointRecord):
    if rec.spectrum is None or not rec.hyperbolic:
        raise NonHyperbolicError("record is not hyperbolic")


def unstable_frame(rec: FixedPointRecord, alpha: float = ALPHA) -> TangentFrame:
    """Orthonormal frame of the eigenspace of multipliers outside the unit disc."""
    _require_hyperbolic(rec)
    if rec.morse_index < 1:
        raise PreconditionError("index-0 point has no unstable directions")
    rows = np.array([e.values for e in rec.spectrum.eigenfunctions[: rec.morse_index]])
    return make_frame(rec.profile, rows, "unstable_at_source", alpha)


def seed_unstable(rec: FixedPointRecord, direction: StateVector, eps: float,
                  span_tol: float = 1e-6, frame: TangentFrame | None = None,
                  alpha: float = ALPHA) -> StateVector:
    """phi + eps * direction for a unit direction in the unstable eigenspace."""
    if not 1e-8 <= eps <= 1e-2:
        raise ValueError(f"eps must lie in [1e-8, 1e-2], got {eps}")
    frame = frame or unstable_frame(rec, alpha)
    res = frame.span_residual(direction.values, alpha)
    if res > span_tol:
        raise ValueError(f"direction leaves the unstable span (relative residual {res:.2e})")
    unit = direction.values / fractional_norm_array(direction.values, alpha)
    return StateVector(rec.profile.grid, rec.profile.values + eps * unit)


# ----------------------------------------------------------------------------
# shooting


@dataclass(frozen=True)
class ShootParams:
    amplitudes: tuple = (1e-4, 1e-3)
    n_directions: int = 8
    n_max: int = 200
    tol: float = CONNECTION_TOL
    consecutive: int = CONSECUTIVE
    stagnation: float = 1e-10
    seed: int = 0
    directions: Optional[tuple] = None


def _index_pair(idx):
    if idx is None or idx <= 0 or idx % 2 == 0:
        return None
    return (idx - 1) // 2


@dataclass(frozen=True, eq=False)
class ConnectionRecord:
    source: FixedPointRecord
    target: FixedPointRecord
    orbit: list
    seed_direction: StateVector
    seed_amplitude: float
    converged_forward: bool
    distance_history: np.ndarray
    zero_history_of_difference: list
    nonlinearity: Optional[Nonlinearity] = field(default=None, repr=False)
    config: Optional[StepperConfig] = field(default=None, repr=False)

    @property
    def m_plus(self):
        return _index_pair(self.target.morse_index)

    @property
    def m_minus(self):
        return _index_pair(self.source.morse_index)


@dataclass
class Shot:
    direction_index: int
    amplitude: float
    outcome: str
    iterations: int
    final_distance: float
    connection: Optional[ConnectionRecord] = None


@dataclass
class SweepLog:
    shots: list

    @property
    def connections(self) -> list:
        return [s.connection for s in self.shots if s.connection is not None]


def direction_mesh(frame: TangentFrame, n_directions: int, seed: int = 0) -> list:
    """Signed frame vectors first, then seeded random unit combinations."""
    A = frame.array()
    dirs = []
    for row in A:
        dirs.extend([row, -row])
    rng = np.random.default_rng(seed)
    while len(dirs) < n_directions:
        c = rng.standard_normal(len(A))
        v = c @ A
        dirs.append(v / fractional_norm_array(v))
    return [StateVector(frame.base.grid, d) for d in dirs[:n_directions]]


def _difference_counts(orbit, tol=DEFAULT_TOL):
    out = []
    for a, b in zip(orbit[:-1], orbit[1:]):
        diff = b.values - a.values
        try:
            out.append(zero_count_array(diff, tol))
        except DegenerateFunctionError:
            out.append(None)
    return out


def _shoot(source, target, seed_state, nl, cfg, params, alpha, homoclinic):
    phi_t = target.profile.values
    u = seed_state.values
    orbit = [seed_state]
    dists = [float(fractional_norm_array(u - phi_t, alpha))]
    excursion = max(100 * params.tol, 1e-2)
    left = not homoclinic
    streak = 0
    for n in range(params.n_max):
        try:
            u_next = poincare_array(u, nl, cfg)
        except BlowUpError:
            return "blowup", orbit, dists, False
        d = float(fractional_norm_array(u_next - phi_t, alpha))
        step = float(fractional_norm_array(u_next - u, alpha))
        orbit.append(StateVector(seed_state.grid, u_next))
        dists.append(d)
        u = u_next
        if d > excursion:
            left = True
        streak = streak + 1 if (left and d <= params.tol) else 0
        if streak >= params.consecutive:
            return "connected", orbit, dists, True
        if step < params.stagnation and d > 10 * params.tol:
            return "stagnated", orbit, dists, False
    return "exhausted", orbit, dists, False


def shoot_sweep(source: FixedPointRecord, target: FixedPointRecord, nl: Nonlinearity,
                cfg: StepperConfig, params: ShootParams = ShootParams(),
                stop_at_first: bool = False, alpha: float = ALPHA) -> SweepLog:
    if source.morse_index is None or source.morse_index < 1:
        raise PreconditionError("shooting needs a source with positive Morse index")
    frame = unstable_frame(source, alpha)
    dirs = list(params.directions) if params.directions else direction_mesh(
        frame, params.n_directions, params.seed)
    homoclinic = float(fractional_norm_array(source.profile.values - target.profile.values,
                                             alpha)) < DEDUP_RADIUS
    shots = []
    for i, direction in enumerate(dirs):
        for eps in params.amplitudes:
            seed_state = seed_unstable(source, direction, eps, frame=frame, alpha=alpha)
            outcome, orbit, dists, ok = _shoot(source, target, seed_state, nl, cfg, params,
                                               alpha, homoclinic)
            conn = None
            if ok:
                conn = ConnectionRecord(source, target, orbit, direction, eps, True,
                                        np.array(dists), _difference_counts(orbit), nl, cfg)
            shots.append(Shot(i, eps, outcome, len(orbit) - 1, dists[-1], conn))
            if conn is not None and stop_at_first:
                return SweepLog(shots)
    return SweepLog(shots)


def find_connection(source: FixedPointRecord, target: FixedPointRecord, nl: Nonlinearity,
                    cfg: StepperConfig, shoot: ShootParams = ShootParams(),
                    log: list | None = None, alpha: float = ALPHA) -> ConnectionRecord | None:
    """First connection from source to target over the shooting mesh, or None.

    A target equal to the source makes this a homoclinic scan: only returns
    after a genuine excursion count.  Shots are appended to ``log`` if given.
    """
    sweep = shoot_sweep(source, target, nl, cfg, shoot, stop_at_first=True, alpha=alpha)
    if log is not None:
        log.extend(sweep.shots)
    conns = sweep.connections
    return conns[0] if conns else None


# ----------------------------------------------------------------------------
# audits


def _same_point(a: FixedPointRecord, b: FixedPointRecord, alpha=ALPHA) -> bool:
    return float(fractional_norm_array(a.profile.values - b.profile.values, alpha)) < DEDUP_RADIUS


def verify_index_drop(conn: ConnectionRecord) -> AuditReport:
    rep = AuditReport("index-drop", True, metrics={
        "source_index": conn.source.morse_index, "target_index": conn.target.morse_index})
    if not (conn.source.hyperbolic and conn.target.hyperbolic):
        raise NonHyperbolicError("index drop needs hyperbolic endpoints")
    if _same_point(conn.source, conn.target):
        rep.failures.append("homoclinic connection")
    if not conn.source.morse_index > conn.target.morse_index:
        rep.failures.append(
            f"index did not drop: {conn.source.morse_index} -> {conn.target.morse_index}")
    rep.passed = not rep.failures
    rep.structural_violation = not rep.passed
    return rep


def check_difference_bounds(differences: Sequence[np.ndarray], ind_minus: int,
                            ind_plus: int | None, tol: float = DEFAULT_TOL) -> AuditReport:
    """z(d) < ind_minus for every non-degenerate d; z(d) > ind_plus if ind_plus > 0."""
    rep = AuditReport("zero-number-bounds", True)
    counts, skipped = [], []
    for n, d in enumerate(differences):
        d = np.asarray(d, dtype=float)
        if np.max(np.abs(d)) < DEGENERATE_SUP:
            skipped.append(n)
            continue
        z = zero_count_array(d, tol).count
        counts.append(z)
        if not z < ind_minus:
            rep.failures.append((n, f"z = {z} not below source index {ind_minus}"))
        if ind_plus and not z > ind_plus:
            rep.failures.append((n, f"z = {z} not above target index {ind_plus}"))
    rep.metrics = {"counts": counts, "skipped_degenerate": skipped,
                   "lower_bound_asserted": bool(ind_plus),
                   "non_increasing": all(a >= b for a, b in zip(counts[:-1], counts[1:]))}
    rep.passed = not rep.failures
    return rep


def verify_zero_number_bounds(conn: ConnectionRecord, tol: float = DEFAULT_TOL) -> AuditReport:
    """Zero number of P(u_n) - u_n along the orbit against both endpoint indices."""
    diffs = [b.values - a.values for a, b in zip(conn.orbit[:-1], conn.orbit[1:])]
    return check_difference_bounds(diffs, conn.source.morse_index, conn.target.morse_index, tol)


def _random_level_combos(rec: FixedPointRecord, levels: Sequence[int], n: int, rng) -> np.ndarray:
    basis = np.vstack([rec.spectrum.level_basis(j) for j in levels])
    return rng.standard_normal((n, basis.shape[0])) @ basis


def stable_level_zero_bounds(rec: FixedPointRecord, n_samples: int = 50, seed: int = 0,
                             tol: float = DEFAULT_TOL) -> AuditReport:
    """Linear surrogate of the stable-side bound: stable eigen-combinations at a
    positive-index point have z = 2j > ind for each stable level j."""
    _require_hyperbolic(rec)
    spec = rec.spectrum
    rng = np.random.default_rng(seed)
    rep = AuditReport("stable-level-zero-bounds", True)
    counts = {}
    for j in range(spec.resolved_levels):
        if spec.level_modulus(j) >= 1.0 or len(spec.level_indices(j)) < (1 if j == 0 else 2):
            continue
        zs = {zero_count_array(v, tol).count for v in _random_level_combos(rec, [j], n_samples, rng)}
        counts[j] = sorted(zs)
        if min(zs) <= rec.morse_index:
            rep.failures.append((j, f"z = {min(zs)} not above index {rec.morse_index}"))
    rep.metrics = {"counts": counts}
    rep.passed = not rep.failures
    return rep


def classify_at_fixed_point(rec: FixedPointRecord, nl: Nonlinearity, cfg: StepperConfig,
                            V: np.ndarray, n_periods: int = 8) -> np.ndarray:
    """Ladder level matched by the forward growth rate of each row under DP(phi).

    The fit runs over the whole record of n_periods periods.  Slow directions
    are only visible until rounding errors, amplified by r_0/r_j per period,
    reach the fit tolerance, so the record is kept short.
    """
    phi = rec.profile.values
    logs, _ = log_norm_records(lambda n, W: dp_apply_array(phi, W, nl, cfg), V, 0, n_periods)
    rates, _ = fit_rates(logs, 1, n_periods)
    out = np.empty(len(rates), dtype=int)
    for i, r in enumerate(rates):
        try:
            out[i] = match_level(r, rec.spectrum)
        except UnclassifiableError:
            out[i] = -1
    return out


def linear_partition_test(rec: FixedPointRecord, nl: Nonlinearity, cfg: StepperConfig,
                          split_level: int | None = None, slow_levels: int = 2,
                          n_samples: int = 200, seed: int = 0, n_periods: int = 8,
                          tol: float = DEFAULT_TOL) -> AuditReport:
    """Zero-number partition at a fixed point.

    Fast vectors are random combinations of levels < split_level and must have
    z < 2 split_level; slow vectors are random combinations of the next
    ``slow_levels`` levels, kept only when forward rates classify them at
    level >= split_level, and must have z >= 2 split_level.
    """
    _require_hyperbolic(rec)
    if split_level is None:
        m = _index_pair(rec.morse_index)
        if m is None:
            raise PreconditionError("default split needs an odd positive index")
        split_level = m + 1
    rng = np.random.default_rng(seed)
    fast = _random_level_combos(rec, range(split_level), n_samples, rng)
    slow = _random_level_combos(rec, range(split_level, split_level + slow_levels), n_samples, rng)
    levels = classify_at_fixed_point(rec, nl, cfg, slow, n_periods)
    slow_kept = slow[levels >= split_level]
    bound = 2 * split_level
    z_fast = np.array([zero_count_array(v, tol).count for v in fast])
    z_slow = np.array([zero_count_array(v, tol).count for v in slow_kept])
    rep = AuditReport("zero-partition", True)
    if np.any(z_fast >= bound):
        rep.failures.append(f"{int(np.sum(z_fast >= bound))} fast vectors with z >= {bound}")
    if np.any(z_slow < bound):
        rep.failures.append(f"{int(np.sum(z_slow < bound))} slow vectors with z < {bound}")
    if len(slow_kept) < n_samples:
        rep.failures.append(f"only {len(slow_kept)} of {n_samples} slow vectors classified slow")
    overlap = set(z_fast.tolist()) & set(z_slow.tolist())
    rep.metrics = {"fast_max_z": int(z_fast.max()), "slow_min_z": int(z_slow.min()) if len(z_slow) else None,
                   "n_fast": len(fast), "n_slow": len(slow_kept), "overlap": sorted(overlap)}
    rep.passed = not rep.failures and not overlap
    return rep


def _mid_orbit_index(conn: ConnectionRecord, tol: float, alpha=ALPHA) -> int:
    src = conn.source.profile.values
    tgt = conn.target.profile.values
    best, best_n = -1.0, None
    for n, u in enumerate(conn.orbit):
        d = min(fractional_norm_array(u.values - src, alpha), fractional_norm_array(u.values - tgt, alpha))
        if d > best:
            best, best_n = float(d), n
    if best <= 10 * tol:
        raise PreconditionError("orbit never leaves the endpoint neighbourhoods")
    return best_n


def propagate_frame(rows: np.ndarray, orbit: Sequence[StateVector], n_end: int,
                    nl: Nonlinearity, cfg: StepperConfig, alpha: float = ALPHA):
    """Carry tangent rows along the orbit, re-orthonormalising every period.

    Returns (rows at orbit[n_end], smallest Gram determinant seen before
    re-orthonormalisation of unit-normalised rows).
    """
    V, _ = orthonormalize(rows, alpha)
    worst = 1.0
    for n in range(n_end):
        _, V, _ = tangent_array(orbit[n].values, V, nl, cfg, 0.0, nl.period_T)
        U = V / fractional_norm_array(V, alpha)[:, None]
        worst = min(worst, float(np.linalg.det(fractional_inner(U, U, alpha))))
        V, _ = orthonormalize(V, alpha)
    return V, worst


@dataclass
class TransversalityReport:
    verdict: str
    codim_stable: Optional[int]
    dim_subframe: Optional[int]
    mid_index: Optional[int]
    partition: Optional[AuditReport]
    notes: list = field(default_factory=list)
    gram_min: Optional[float] = None

    @property
    def transversal(self) -> bool:
        return self.verdict == "transversal"


def transversality_check(conn: ConnectionRecord, truncation_k: int = 4, n_samples: int = 50,
                         n_forward: int = 40, seed: int = 0,
                         tol: float = DEFAULT_TOL) -> TransversalityReport:
    """Dimension count plus zero-number partition at a mid-orbit point.

    codim T W^s(target) = ind(target) = 2 m^+ + 1.  The sub-frame of levels
    0..m^+ of the source's unstable space, carried to the mid point, must have
    that dimension and z < 2(m^+ + 1); vectors whose forward rate puts them in
    F^+_{m^+ + 1} there must have z >= 2(m^+ + 1).
    """
    tgt, src = conn.target, conn.source
    if tgt.spectrum is None or src.spectrum is None:
        return TransversalityReport("inconclusive", None, None, None, None, ["spectra missing"])
    codim = int(tgt.morse_index)
    if codim == 0:
        return TransversalityReport("transversal", 0, 0, None, None,
                                    ["target index 0: stable manifold is open, transversal by count"])
    m_plus = conn.m_plus
    if m_plus is None:
        return TransversalityReport("inconclusive", codim, None, None, None,
                                    [f"target index {codim} is even; ladder bookkeeping undefined"])
    if src.spectrum.resolved_levels <= m_plus or tgt.spectrum.resolved_levels <= min(m_plus + 1, truncation_k):
        return TransversalityReport("inconclusive", codim, None, None, None, ["ladder not resolved"])
    nl, cfg = conn.nonlinearity, conn.config
    notes = []
    idx = [i for j in range(m_plus + 1) for i in src.spectrum.level_indices(j)]
    sub = np.array([src.spectrum.eigenfunctions[i].values for i in idx])
    mid = _mid_orbit_index(conn, CONNECTION_TOL)
    frame_mid, gram_min = propagate_frame(sub, conn.orbit, mid, nl, cfg)
    dims_ok = frame_mid.shape[0] == 2 * m_plus + 1 == codim
    if not dims_ok:
        notes.append(f"sub-frame dimension {frame_mid.shape[0]} vs codim {codim}")
    bound = 2 * (m_plus + 1)
    rng = np.random.default_rng(seed)
    fast = rng.standard_normal((n_samples, frame_mid.shape[0])) @ frame_mid
    z_fast = [zero_count_array(v, tol).count for v in fast]
    # candidate stable vectors: high Fourier content, kept if rates say so
    x = conn.orbit[mid].grid.nodes
    ks = np.arange(m_plus + 1, m_plus + 1 + truncation_k)
    cand = np.array([sum(rng.standard_normal() * np.cos(k * x + rng.uniform(0, 2 * np.pi)) for k in ks)
                     for _ in range(n_samples)])
    levels = _forward_levels_along(conn, mid, cand, n_forward)
    kept = cand[levels >= m_plus + 1]
    z_slow = [zero_count_array(v, tol).count for v in kept]
    part = AuditReport("zero-partition", True, metrics={
        "fast_max_z": max(z_fast), "slow_min_z": min(z_slow) if z_slow else None,
        "n_slow": len(kept)})
    if max(z_fast) >= bound:
        part.failures.append("propagated sub-frame vector with z >= bound")
    if z_slow and min(z_slow) < bound:
        part.failures.append("slow-classified vector with z < bound")
    part.passed = not part.failures
    verdict = "transversal" if dims_ok and part.passed else "not-transversal"
    return TransversalityReport(verdict, codim, frame_mid.shape[0], mid, part, notes, gram_min)


def _forward_levels_along(conn, start, V, n_forward):
    """Target-ladder level of each row's forward rate from orbit[start] on."""
    nl, cfg = conn.nonlinearity, conn.config
    base = [conn.orbit[start].values]

    def step(n, W):
        u, W2, _ = tangent_array(base[0], W, nl, cfg, 0.0, nl.period_T)
        base[0] = u
        return W2

    logs, _ = log_norm_records(step, V, 0, n_forward)
    rates, _ = fit_rates(logs, n_forward // 2, n_forward)
    out = np.empty(len(rates), dtype=int)
    for i, r in enumerate(rates):
        try:
            out[i] = match_level(r, conn.target.spectrum)
        except UnclassifiableError:
            out[i] = -1
    return out


# ----------------------------------------------------------------------------
# omega-limit census


def best_translate(u: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Shift a minimising ||u - w(. + a)||_2 and the minimum, by FFT
    cross-correlation over grid shifts followed by bounded refinement."""
    n = len(u)
    cu, cw = np.fft.rfft(u), np.fft.rfft(w)
    corr = np.fft.irfft(cu * np.conj(cw), n=n)
    # corr[m] peaks where u(x + x_m) ~ w(x), i.e. u ~ w(. - x_m)
    a0 = -2 * np.pi * int(np.argmax(corr)) / n
    k = np.arange(n // 2 + 1)

    def shifted(a):
        return np.fft.irfft(cw * np.exp(1j * k * a), n=n)

    def err2(a):
        # squared, so the minimum is smooth rather than a V for exact matches
        r = u - shifted(a)
        return float(r @ r)

    h = 2 * np.pi / n
    res = minimize_scalar(err2, bounds=(a0 - h, a0 + h), method="bounded",
                          options={"xatol": 1e-12})
    # err2 is flat to rounding within ~1e-8 of its minimum; its derivative
    # crosses zero linearly, so a few Newton steps on it finish the job
    a, best = res.x, res.fun
    for _ in range(4):
        e = cw * np.exp(1j * k * a)
        s, s1, s2 = (np.fft.irfft(e * (1j * k) ** p, n=n) for p in (0, 1, 2))
        r = u - s
        curv = s1 @ s1 - r @ s2
        if not curv > 0:
            break
        step = (r @ s1) / curv
        if abs(step) > h:
            break
        a += step
        if err2(a) <= best:
            best = err2(a)
        else:
            a -= step
            break
    return float(np.mod(a, 2 * np.pi)), float(np.sqrt(max(best, 0.0))) * np.sqrt(2 * np.pi / n)


@dataclass
class OmegaEntry:
    seed_index: int
    outcome: str
    target: Optional[int] = None
    shift: Optional[float] = None
    distance: float = float("nan")
    note: str = ""


@dataclass
class OmegaReport:
    entries: list

    @property
    def histogram(self) -> dict:
        h = {}
        for e in self.entries:
            h[e.outcome] = h.get(e.outcome, 0) + 1
        return h

    @property
    def all_resolved(self) -> bool:
        return all(e.outcome == "fixed_point" for e in self.entries)


def omega_limit_census(nl: Nonlinearity, cfg: StepperConfig, seeds: Sequence[StateVector],
                       n_transient: int = 40, n_window: int = 10, census: Sequence = (),
                       profiles: Sequence[StateVector] = (), tol: float = 1e-6,
                       alpha: float = ALPHA) -> OmegaReport:
    """Classify where each seed's P-orbit ends up.

    Outcomes: ``fixed_point`` (all window iterates within tol of census entry
    ``target``), ``translate`` (within tol of shifts of stored profile
    ``target``), ``blowup`` or ``unresolved``.
    """
    entries = []
    for i, seed in enumerate(seeds):
        u = seed.values
        window = []
        try:
            for n in range(n_transient + n_window):
                u = poincare_array(u, nl, cfg)
                if n >= n_transient:
                    window.append(u)
        except BlowUpError as exc:
            entries.append(OmegaEntry(i, "blowup", note=str(exc)))
            continue
        W = np.array(window)
        entry = None
        for j, rec in enumerate(census):
            d = float(np.max(fractional_norm_array(W - rec.profile.values, alpha)))
            if d < tol:
                entry = OmegaEntry(i, "fixed_point", j, None, d)
                break
        if entry is None:
            for j, prof in enumerate(profiles):
                fits = [best_translate(w, prof.values) for w in W]
                d = max(err for _, err in fits)
                if d < tol:
                    entry = OmegaEntry(i, "translate", j, fits[-1][0], d)
                    break
        if entry is None:
            last_step = float(fractional_norm_array(W[-1] - W[-2], alpha)) if len(W) > 1 else float("nan")
            note = "stationary but uncatalogued" if last_step < tol else "still moving"
            dmin = min((float(fractional_norm_array(W[-1] - r.profile.values, alpha)) for r in census),
                       default=float("nan"))
            entry = OmegaEntry(i, "unresolved", None, None, dmin, note)
        entries.append(entry)
    return OmegaReport(entries)


@dataclass
class MorseSmaleReport:
    verdict: str
    reasons: list
    n_fixed_points: int
    n_connections: int
    transversality: list
    notes: list = field(default_factory=lambda: ["injectivity of P and DP assumed by theory, not tested"])


def morse_smale_verdict(census: Sequence[FixedPointRecord], connections: Sequence[ConnectionRecord],
                        omega_report: OmegaReport, transversality: Sequence | None = None) -> MorseSmaleReport:
    """yes iff finite hyperbolic census, omega census fully resolved onto it and
    every connection transversal; no / inconclusive otherwise, with reasons."""
    reasons, verdict = [], "yes"
    if not census:
        reasons.append("(i) empty census")
        verdict = "inconclusive"
    bad = [i for i, r in enumerate(census) if not r.hyperbolic]
    if bad:
        reasons.append(f"(i) non-hyperbolic census records {bad}")
        verdict = "no"
    if not omega_report.all_resolved:
        reasons.append(f"(ii) omega census not resolved: {omega_report.histogram}")
        if verdict == "yes":
            verdict = "inconclusive"
    if transversality is None:
        transversality = [transversality_check(c) for c in connections]
    for i, t in enumerate(transversality):
        if t.verdict == "not-transversal":
            reasons.append(f"(iii) connection {i} not transversal")
            verdict = "no"
        elif t.verdict != "transversal" and verdict == "yes":
            reasons.append(f"(iii) connection {i} inconclusive")
            verdict = "inconclusive"
    return MorseSmaleReport(verdict, reasons, len(census), len(connections), list(transversality))
