"""Fixed points of the Poincare map, their Floquet spectra and Morse indices."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (BlowUpError, NonConvergenceError, NonHyperbolicError,
                     SingularJacobianError)
from .grid import StateVector, fractional_norm_array
from .stepper import Nonlinearity, StepperConfig, dp_apply_array, poincare_array
from .zeroes import zero_count_array

ALPHA = 0.875
HYPERBOLICITY_MARGIN = 1e-3
DEDUP_RADIUS = 1e-6
# real multipliers closer than this (relative) share one eigenspace basis
CLUSTER_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FloquetSpectrum:
    """Leading multipliers sorted by non-increasing modulus.

    ``eigenfunctions[i]`` belongs to ``multipliers[i]``; for a complex pair the
    two entries hold the real and imaginary parts of one eigenvector, which
    together span the real eigenplane.
    """

    multipliers: np.ndarray
    eigenfunctions: list
    moduli_ladder: np.ndarray
    arnoldi_residuals: np.ndarray
    k_max: int
    partial: bool = False
    accept_tol: float = 1e-8

    @property
    def n_resolved(self) -> int:
        return len(self.multipliers)

    def level_of(self, i: int) -> int:
        return 0 if i == 0 else (i + 1) // 2

    def level_indices(self, j: int) -> list[int]:
        if j == 0:
            return [0]
        idx = [2 * j - 1, 2 * j]
        return [i for i in idx if i < self.n_resolved]

    def level_modulus(self, j: int) -> float:
        """r_j: the larger modulus of level j."""
        return float(self.moduli_ladder[self.level_indices(j)[0]])

    def level_basis(self, j: int) -> np.ndarray:
        return np.array([self.eigenfunctions[i].values for i in self.level_indices(j)])

    @property
    def resolved_levels(self) -> int:
        """Number of complete levels 0..L-1 present."""
        if self.n_resolved == 0:
            return 0
        return 1 + (self.n_resolved - 1) // 2


@dataclass(frozen=True, eq=False)
class FixedPointRecord:
    profile: StateVector
    residual: float
    spectrum: Optional[FloquetSpectrum]
    morse_index: Optional[int]
    hyperbolic: bool
    hyperbolicity_margin: float
    homogeneity_defect: float
    newton_history: tuple = field(default=(), repr=False)
    label: str = ""

    @property
    def mean_value(self) -> float:
        return float(np.mean(self.profile.values))


# ----------------------------------------------------------------------------
# block Arnoldi


def block_arnoldi(apply_block: Callable[[np.ndarray], np.ndarray], n: int,
                  subspace_dim: int, block_size: int = 2,
                  rng: np.random.Generator | None = None):
    """Block Arnoldi with full (two-pass) reorthogonalisation.

    ``apply_block`` maps a (b, n) array of row vectors to their images.
    Returns (Q, H) where Q has orthonormal rows spanning the block Krylov
    space and H = Q A Q^T is block upper Hessenberg.  When a new block is
    (nearly) rank deficient the missing directions are refilled with random
    vectors orthogonal to the basis, so Q stays orthonormal.
    """
    rng = rng or np.random.default_rng(0)
    b = block_size
    start = rng.standard_normal((b, n))
    Qb, _ = np.linalg.qr(start.T)
    basis = [Qb.T]
    n_blocks = max(1, min(subspace_dim, n) // b)
    H = np.zeros((n_blocks * b, n_blocks * b))
    scale = None
    for j in range(n_blocks):
        W = apply_block(basis[j])
        if scale is None:
            scale = max(np.linalg.norm(W), 1e-300)
        Q = np.vstack(basis)
        for _ in range(2):
            coef = Q @ W.T
            W = W - coef.T @ Q
            H[: Q.shape[0], j * b:(j + 1) * b] += coef
        if j == n_blocks - 1:
            break
        # pivoted QR puts deficient directions last, where dropping them costs
        # no more than their (tiny) diagonal entries
        q, r, piv = scipy.linalg.qr(W.T, mode="economic", pivoting=True)
        deficient = np.abs(np.diag(r)) < 1e-10 * scale
        r = r[:, np.argsort(piv)]
        for i in np.flatnonzero(deficient):
            r[i] = 0.0
            fresh = rng.standard_normal(n)
            others = np.vstack([Q, np.delete(q.T, i, axis=0)])
            for _ in range(2):
                fresh -= others.T @ (others @ fresh)
            q[:, i] = fresh / np.linalg.norm(fresh)
        H[(j + 1) * b:(j + 2) * b, j * b:(j + 1) * b] = r
        basis.append(q.T)
    return np.vstack(basis), H

def _leading_eigenpairs(apply_block, n, n_wanted, subspace_dim, block_size, rng):
    Q, H = block_arnoldi(apply_block, n, subspace_dim, block_size, rng)
    theta, S = np.linalg.eig(H)
    order = np.lexsort((-theta.imag, -np.abs(theta)))
    theta = theta[order]
    S = S[:, order]
    n_wanted = min(n_wanted, len(theta))
    # keep complex pairs together
    if n_wanted < len(theta) and abs(theta[n_wanted - 1].imag) > 0 and \
            np.isclose(theta[n_wanted], np.conj(theta[n_wanted - 1])):
        n_wanted += 1
    vals = theta[:n_wanted]
    vecs = (S[:, :n_wanted].T @ Q)
    return vals, vecs


def floquet_spectrum(profile: StateVector, nl: Nonlinearity, cfg: StepperConfig,
                     k_max: int = 4, accept_tol: float = 1e-8, block_size: int = 2,
                     subspace_dim: int | None = None, seed: int = 0,
                     alpha: float = ALPHA) -> FloquetSpectrum:
    """Leading Floquet multipliers at a fixed point via matrix-free Arnoldi.

    Enough multipliers are returned to cover modulus levels 0..k_max
    (2 k_max + 1 of them).  A multiplier is accepted when the eigen-residual,
    measured by an explicit tangent propagation, is below accept_tol * r_0.
    """
    phi = profile.values

    def apply_block(V):
        return dp_apply_array(phi, V, nl, cfg)

    return monodromy_spectrum(apply_block, profile.grid, k_max, accept_tol=accept_tol,
                              block_size=block_size, subspace_dim=subspace_dim,
                              seed=seed, alpha=alpha)


def monodromy_spectrum(apply_block: Callable[[np.ndarray], np.ndarray], grid,
                       k_max: int = 4, accept_tol: float = 1e-8, block_size: int = 2,
                       subspace_dim: int | None = None, seed: int = 0,
                       alpha: float = ALPHA) -> FloquetSpectrum:
    """Leading spectrum of any period map given by its action on row stacks."""
    n = grid.n_points
    if subspace_dim is None:
        subspace_dim = 4 * k_max + 8
    rng = np.random.default_rng(seed)
    n_wanted = 2 * k_max + 1
    vals, vecs = _leading_eigenpairs(apply_block, n, n_wanted, subspace_dim, block_size, rng)

    funcs, mults = [], []
    i = 0
    while i < len(vals):
        lam = vals[i]
        y = vecs[i]
        if abs(lam.imag) > 1e-12 * max(abs(lam), 1e-300):
            re, im = y.real, y.imag
            funcs.extend([re, im])
            mults.extend([lam, np.conj(lam)])
            i += 2
        else:
            # repeated real eigenvalues: eig may hand back complex vectors in
            # the real eigenspace, so take a real basis of their joint span
            m = 1
            while (i + m < len(vals) and abs(vals[i + m].imag) <= 1e-12 * abs(vals[i + m])
                   and abs(vals[i + m].real - lam.real) <= CLUSTER_TOL * abs(lam)):
                m += 1
            block = vecs[i:i + m]
            _, _, Vt = np.linalg.svd(np.vstack([block.real, block.imag]), full_matrices=False)
            for r in range(m):
                funcs.append(Vt[r])
                mults.append(complex(vals[i + r].real, 0.0))
            i += m
    funcs = np.array(funcs)
    mults = np.array(mults)

    # explicit residuals in X^alpha: the eigenplane of a pair maps into itself
    images = apply_block(funcs)
    residuals = np.empty(len(mults))
    i = 0
    while i < len(mults):
        lam = mults[i]
        if lam.imag != 0 and i + 1 < len(mults):
            re, im = funcs[i], funcs[i + 1]
            a, b = lam.real, lam.imag
            r_re = images[i] - (a * re - b * im)
            r_im = images[i + 1] - (b * re + a * im)
            nrm = np.hypot(fractional_norm_array(re, alpha), fractional_norm_array(im, alpha))
            res = np.hypot(fractional_norm_array(r_re, alpha), fractional_norm_array(r_im, alpha)) / nrm
            residuals[i] = residuals[i + 1] = res
            i += 2
        else:
            res = fractional_norm_array(images[i] - lam.real * funcs[i], alpha)
            residuals[i] = res / fractional_norm_array(funcs[i], alpha)
            i += 1

    norms = fractional_norm_array(funcs, alpha)
    funcs = funcs / norms[:, None]
    moduli = np.abs(mults)
    r0 = moduli[0] if len(moduli) else 1.0
    accepted = residuals < accept_tol * r0
    partial = not bool(np.all(accepted)) or len(mults) < n_wanted
    keep = len(mults)
    if not np.all(accepted):
        keep = int(np.argmin(accepted))
    return FloquetSpectrum(
        multipliers=mults[:keep],
        eigenfunctions=[StateVector(grid, f) for f in funcs[:keep]],
        moduli_ladder=moduli[:keep],
        arnoldi_residuals=residuals[:keep],
        k_max=k_max,
        partial=partial,
        accept_tol=accept_tol,
    )


def morse_index(spec: FloquetSpectrum, margin: float = HYPERBOLICITY_MARGIN) -> int:
    """Number of multipliers with modulus > 1, counted with multiplicity."""
    moduli = np.asarray(spec.moduli_ladder)
    near = np.abs(moduli - 1.0) <= margin
    if np.any(near):
        raise NonHyperbolicError(
            f"multiplier modulus {moduli[near][0]:.6g} within {margin} of the unit circle")
    if len(moduli) and moduli[-1] > 1.0:
        raise NonHyperbolicError("spectrum does not resolve every multiplier outside the unit disc")
    return int(np.sum(moduli > 1.0))


def hyperbolicity_margin(spec: FloquetSpectrum) -> float:
    moduli = np.asarray(spec.moduli_ladder)
    return float(np.min(np.abs(moduli - 1.0))) if len(moduli) else float("nan")


# ----------------------------------------------------------------------------
# Newton-Krylov


def newton_fixed_point(guess: StateVector, nl: Nonlinearity, cfg: StepperConfig,
                       tol: float = 1e-10, max_iter: int = 25, k_max: int = 4,
                       margin: float = HYPERBOLICITY_MARGIN, gmres_rtol: float = 1e-8,
                       with_spectrum: bool = True, alpha: float = ALPHA,
                       max_k_max: int = 12) -> FixedPointRecord:
    """Solve P(u) = u by Newton's method with a GMRES inner solver.

    Jacobian actions are exact tangent propagations minus the identity.
    Steps are halved while they fail to reduce the residual.
    """
    u = np.array(guess.values, dtype=float)
    n = len(u)

    def residual_of(v):
        r = poincare_array(v, nl, cfg) - v
        return r, float(fractional_norm_array(r, alpha))

    r, res = residual_of(u)
    history = [res]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NonConvergenceError(
                f"Newton did not converge in {max_iter} iterations (residual {res:.3e})",
                last_iterate=StateVector(guess.grid, u), residual=res)
        it += 1
        base = u.copy()

        def matvec(x, base=base):
            return dp_apply_array(base, np.asarray(x).ravel()[None, :], nl, cfg)[0] - np.asarray(x).ravel()

        J = LinearOperator((n, n), matvec=matvec, dtype=float)
        step, info = gmres(J, -r, rtol=gmres_rtol, atol=0.0, restart=min(n, 60), maxiter=4)
        lin_res = np.linalg.norm(matvec(step) + r) / max(np.linalg.norm(r), 1e-300)
        if info != 0 and lin_res > 1e-4:
            raise SingularJacobianError(
                f"GMRES stalled (relative residual {lin_res:.2e}); Jacobian near singular")
        s = 1.0
        while True:
            trial = base + s * step
            try:
                r_new, res_new = residual_of(trial)
            except BlowUpError:
                res_new = np.inf
            if res_new < res or s < 1e-4:
                break
            s *= 0.5
        if not np.isfinite(res_new):
            raise NonConvergenceError("Newton iterate left the domain of P",
                                      last_iterate=StateVector(guess.grid, base), residual=res)
        u, r, res = trial, r_new, res_new
        history.append(res)

    profile = StateVector(guess.grid, u)
    record = FixedPointRecord(profile=profile, residual=res, spectrum=None, morse_index=None,
                              hyperbolic=False, hyperbolicity_margin=float("nan"),
                              homogeneity_defect=float(np.max(u) - np.min(u)),
                              newton_history=tuple(history))
    if with_spectrum:
        record = attach_spectrum(record, nl, cfg, k_max=k_max, margin=margin,
                                 max_k_max=max_k_max)
    return record


def attach_spectrum(record: FixedPointRecord, nl: Nonlinearity, cfg: StepperConfig,
                    k_max: int = 4, margin: float = HYPERBOLICITY_MARGIN,
                    max_k_max: int = 12) -> FixedPointRecord:
    """Fill spectrum, Morse index and hyperbolicity of a record.

    k_max grows until the smallest resolved modulus is inside the unit disc
    by more than the margin, so every unstable multiplier is counted.
    """
    while True:
        spec = floquet_spectrum(record.profile, nl, cfg, k_max=k_max)
        moduli = spec.moduli_ladder
        if len(moduli) == 0 or moduli[-1] < 1.0 - margin or k_max >= max_k_max or spec.partial:
            break
        k_max = min(max_k_max, 2 * k_max)
    hmargin = hyperbolicity_margin(spec)
    hyperbolic = bool(hmargin > margin) and len(moduli) > 0 and moduli[-1] < 1.0
    index = int(np.sum(moduli > 1.0))
    return replace(record, spectrum=spec, morse_index=index, hyperbolic=hyperbolic,
                   hyperbolicity_margin=hmargin)


# ----------------------------------------------------------------------------
# audits


@dataclass
class AuditReport:
    name: str
    passed: bool
    failures: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    structural_violation: bool = False

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


def verify_eigen_structure(spec: FloquetSpectrum, tol: float = 1e-6,
                           hyperbolic: bool | None = None, n_rotations: int = 16,
                           zero_tol: float = 1e-9, seed: int = 0) -> AuditReport:
    """Check the modulus ladder and the zero count 2j on each level j."""
    rep = AuditReport("eigen-structure", True)
    moduli = np.asarray(spec.moduli_ladder)
    levels = spec.resolved_levels
    # (a) ladder ordering
    for j in range(levels):
        idx = spec.level_indices(j)
        if len(idx) == 2 and moduli[idx[1]] > moduli[idx[0]] * (1 + tol):
            rep.failures.append((j, "paired moduli out of order"))
        if j + 1 < levels:
            lo = moduli[idx[-1]]
            hi_next = moduli[spec.level_indices(j + 1)[0]]
            if not lo > hi_next * (1 + tol):
                rep.failures.append((j, f"no strict gap to level {j + 1}: {lo:.6g} vs {hi_next:.6g}"))
    # (b) zero counts of real combinations within each level
    rng = np.random.default_rng(seed)
    counts = {}
    for j in range(levels):
        basis = spec.level_basis(j)
        if j >= 1 and basis.shape[0] < 2:
            break
        combos = [basis[i] for i in range(basis.shape[0])]
        if basis.shape[0] == 2:
            for ang in rng.uniform(0, 2 * np.pi, n_rotations):
                combos.append(np.cos(ang) * basis[0] + np.sin(ang) * basis[1])
        seen = set()
        for v in combos:
            zc = zero_count_array(v, zero_tol)
            seen.add(zc.count)
            if zc.count != 2 * j or not zc.all_simple:
                rep.failures.append((j, f"zero count {zc.count} (simple={zc.all_simple}), expected {2 * j}"))
                break
        counts[j] = sorted(seen)
    # (c) paired moduli equal at hyperbolic points
    if hyperbolic:
        for j in range(1, levels):
            idx = spec.level_indices(j)
            if len(idx) == 2 and abs(moduli[idx[0]] - moduli[idx[1]]) > tol * moduli[idx[0]]:
                rep.failures.append((j, "paired moduli differ at a hyperbolic point"))
    rep.metrics = {"levels": levels, "zero_counts": counts}
    rep.passed = not rep.failures
    return rep


def verify_hyperbolic_rigidity(rec: FixedPointRecord, tol: float = 1e-8) -> AuditReport:
    """Hyperbolic fixed points are homogeneous and have index 0 or odd."""
    if not rec.hyperbolic:
        raise NonHyperbolicError("rigidity audit needs a hyperbolic record")
    rep = AuditReport("hyperbolic-rigidity", True,
                      metrics={"homogeneity_defect": rec.homogeneity_defect,
                               "morse_index": rec.morse_index})
    if rec.homogeneity_defect > tol:
        rep.failures.append(f"profile not homogeneous (defect {rec.homogeneity_defect:.3e})")
    if rec.morse_index != 0 and rec.morse_index % 2 == 0:
        rep.failures.append(f"even positive Morse index {rec.morse_index}")
    rep.passed = not rep.failures
    rep.structural_violation = not rep.passed
    return rep


class Census(list):
    """Deduplicated fixed-point records plus per-seed failures."""

    def __init__(self, records=(), failures=()):
        super().__init__(records)
        self.failures = list(failures)


def fixed_point_census(nl: Nonlinearity, cfg: StepperConfig, seeds: Sequence[StateVector],
                       tol: float = 1e-10, dedup_radius: float = DEDUP_RADIUS,
                       k_max: int = 4, alpha: float = ALPHA) -> Census:
    """Newton from every seed, deduplicate, then attach spectra.

    Sorted by Morse index (largest first), then by mean value.
    """
    found, failures = [], []
    for i, seed in enumerate(seeds):
        try:
            rec = newton_fixed_point(seed, nl, cfg, tol=tol, with_spectrum=False, alpha=alpha)
        except (NonConvergenceError, SingularJacobianError, BlowUpError) as exc:
            failures.append((i, type(exc).__name__, str(exc)))
            continue
        if not any(fractional_norm_array(rec.profile.values - other.profile.values, alpha)
                   < dedup_radius for other in found):
            found.append(rec)
    records = [attach_spectrum(r, nl, cfg, k_max=k_max) for r in found]
    records.sort(key=lambda r: (-r.morse_index, r.mean_value))
    return Census(records, failures)
