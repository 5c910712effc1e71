"""Linear equations asymptotic to a periodic one: period-map convergence,
growth rates along forward and backward sequences, and the zero-number
filtration they induce.

Backward rates are never obtained by integrating backwards in time.  A
backward sequence starts at n = -n_back and is propagated forward; the early
part of the record stands in for n -> -infinity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateFunctionError, UnclassifiableError
from .floquet import ALPHA, FloquetSpectrum, monodromy_spectrum
from .grid import CircleGrid, StateVector, fractional_inner, fractional_norm_array
from .stepper import StepperConfig, linear_array
from .zeroes import DEFAULT_TOL, zero_count_array

AMBIGUITY_BAND = 0.25


def _zero_field(t, x):
    return np.zeros_like(x)


@dataclass(frozen=True, eq=False)
class LinearProblem:
    """v_t = v_xx + c(t,x) v_x + d(t,x) v, asymptotic to a T-periodic limit.

    Coefficients are vectorised callables ``(t, x_array) -> array``.
    """

    c: Callable
    d: Callable
    limit_c: Callable
    limit_d: Callable
    period_T: float

    def __post_init__(self):
        if not self.period_T > 0:
            raise ValueError("period_T must be positive")

    @classmethod
    def periodic(cls, c: Callable | None, d: Callable, period_T: float) -> "LinearProblem":
        c = c or _zero_field
        return cls(c, d, c, d, period_T)

    def limit(self) -> "LinearProblem":
        return LinearProblem(self.limit_c, self.limit_d, self.limit_c, self.limit_d,
                             self.period_T)

    def coefficient_arrays(self, grid: CircleGrid, limit: bool = False):
        x = grid.nodes
        c_fn, d_fn = (self.limit_c, self.limit_d) if limit else (self.c, self.d)
        shape = x.shape

        def coefficients(t):
            return (np.broadcast_to(c_fn(t, x), shape), np.broadcast_to(d_fn(t, x), shape))

        return coefficients

    def coefficient_defect(self, n: int, grid: CircleGrid, samples: int = 16) -> float:
        """Sampled sup of |c - limit_c| + |d - limit_d| over [nT, (n+1)T] x S^1."""
        x = grid.nodes
        worst = 0.0
        for t in self.period_T * (n + np.linspace(0.0, 1.0, samples)):
            dev = np.abs(self.c(t, x) - self.limit_c(t, x)) + np.abs(self.d(t, x) - self.limit_d(t, x))
            worst = max(worst, float(np.max(dev)))
        return worst


def period_map(lp: LinearProblem, cfg: StepperConfig, V: np.ndarray, n: int,
               limit: bool = False) -> np.ndarray:
    """S((n+1)T, nT) applied to the rows of V (the limit map S_p if ``limit``)."""
    T = lp.period_T
    cfg.steps_per_period(T)
    grid = CircleGrid(np.shape(V)[-1])
    coeffs = lp.coefficient_arrays(grid, limit=limit)
    t0 = 0.0 if limit else n * T
    return linear_array(coeffs, V, cfg, t0, t0 + T)


def limit_spectrum(lp: LinearProblem, cfg: StepperConfig, grid: CircleGrid,
                   k_max: int = 4, **kwargs) -> FloquetSpectrum:
    """Floquet spectrum of the limiting periodic problem."""

    def apply_block(V):
        return period_map(lp, cfg, V, 0, limit=True)

    return monodromy_spectrum(apply_block, grid, k_max, **kwargs)


class ConvergenceSequence(list):
    """Per-period operator distances; ``converged`` tells whether they decay."""

    def __init__(self, values, threshold: float = 1e-3):
        super().__init__(float(v) for v in values)
        self.threshold = threshold

    @property
    def converged(self) -> bool:
        if not self:
            return True
        first, last = self[0], self[-1]
        return last <= 1e-10 or last <= self.threshold * max(first, 1e-300)


def _fourier_probes(grid: CircleGrid, probe_dim: int) -> np.ndarray:
    x = grid.nodes
    rows = [np.ones_like(x)]
    k = 1
    while len(rows) < probe_dim:
        rows.append(np.cos(k * x))
        if len(rows) < probe_dim:
            rows.append(np.sin(k * x))
        k += 1
    return np.array(rows[:probe_dim])


def operator_convergence_audit(lp: LinearProblem, cfg: StepperConfig, n_max: int = 20,
                               probe_dim: int = 9, grid: CircleGrid | None = None,
                               alpha: float = ALPHA) -> ConvergenceSequence:
    """max over Fourier probes of ||(S((n+1)T,nT) - S_p) psi|| / ||psi||, n = 0..n_max.

    Probing gives a lower bound for the operator norm, which is enough to see
    whether the period maps approach the limit map.
    """
    grid = grid or CircleGrid(64)
    probes = _fourier_probes(grid, probe_dim)
    probe_norms = fractional_norm_array(probes, alpha)
    limit_images = period_map(lp, cfg, probes, 0, limit=True)
    out = []
    for n in range(n_max + 1):
        images = period_map(lp, cfg, probes, n)
        out.append(np.max(fractional_norm_array(images - limit_images, alpha) / probe_norms))
    return ConvergenceSequence(out)


@dataclass(frozen=True)
class GrowthRateEstimate:
    rate: float
    window: tuple
    slope_confidence: float
    direction: str
    log_norms: np.ndarray = field(repr=False, default=None)
    final: Optional[np.ndarray] = field(repr=False, default=None)
    aligned: Optional[np.ndarray] = field(repr=False, default=None)

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.window[1] - self.window[0] < 8:
            raise ValueError("fit window must span at least 8 periods")


def log_norm_records(step: Callable, V0: np.ndarray, n_first: int, n_periods: int,
                     alpha: float = ALPHA):
    """log ||v_n|| for every row of V0, n = n_first..n_first+n_periods.

    ``step(n, V)`` maps the rows at period n to period n+1.  Rows are
    rescaled every period and the logs accumulated, so neither overflow nor
    underflow occurs.  Returns (logs of shape (n_periods+1, m), unit rows per
    period).
    """
    V = np.atleast_2d(np.asarray(V0, dtype=float))
    nrm = fractional_norm_array(V, alpha)
    if np.any(nrm == 0.0):
        raise DegenerateFunctionError("growth rate of the zero vector is undefined")
    log_acc = np.log(nrm)
    V = V / nrm[:, None]
    logs = [log_acc.copy()]
    states = [V.copy()]
    for n in range(n_first, n_first + n_periods):
        V = step(n, V)
        nrm = fractional_norm_array(V, alpha)
        if np.any(nrm == 0.0) or not np.all(np.isfinite(nrm)):
            raise DegenerateFunctionError("iterate vanished or overflowed", time=n + 1)
        log_acc = log_acc + np.log(nrm)
        V = V / nrm[:, None]
        logs.append(log_acc.copy())
        states.append(V.copy())
    return np.array(logs), states


def fit_rates(logs: np.ndarray, lo: int, hi: int, n_first: int = 0):
    """Per-row least-squares slope of logs[lo:hi+1] against n; returns (rates, rms residuals)."""
    ns = n_first + np.arange(lo, hi + 1, dtype=float)
    block = logs[lo:hi + 1]
    A = np.vstack([ns, np.ones_like(ns)]).T
    coef, *_ = np.linalg.lstsq(A, block, rcond=None)
    resid = block - A @ coef
    return np.exp(coef[0]), np.sqrt(np.mean(resid ** 2, axis=0))


def _lp_step(lp, cfg):
    def step(n, V):
        return period_map(lp, cfg, V, n)

    return step


def rho_forward(lp: LinearProblem, cfg: StepperConfig, v0: StateVector, n_max: int = 60,
                alpha: float = ALPHA, m: int = 0) -> GrowthRateEstimate:
    """Estimate lim ||v(nT; mT, v0)||^{1/n} from a log-linear fit over n in [n_max/2, n_max]."""
    if n_max < 16:
        raise ValueError("n_max must be at least 16")
    logs, states = log_norm_records(_lp_step(lp, cfg), v0.values, m, n_max, alpha)
    lo = n_max // 2
    rate, conf = fit_rates(logs, lo, n_max)
    return GrowthRateEstimate(float(rate[0]), (m + lo, m + n_max), float(conf[0]), "forward",
                              log_norms=logs[:, 0], final=states[-1][0], aligned=states[-1][0])


def rho_backward(lp: LinearProblem, cfg: StepperConfig, v_start: StateVector,
                 n_back: int = 60, alpha: float = ALPHA) -> GrowthRateEstimate:
    """Backward-in-n growth rate from a forward run started at n = -n_back.

    ``lp`` must be asymptotic to its limit as t -> -infinity.  The fit uses
    the earliest half of the record, n in [-n_back, -n_back/2]; ``final`` is
    the iterate at n = 0, which is the vector psi being classified.
    """
    if n_back < 16:
        raise ValueError("n_back must be at least 16")
    logs, states = log_norm_records(_lp_step(lp, cfg), v_start.values, -n_back, n_back, alpha)
    hi = n_back // 2
    rate, conf = fit_rates(logs, 0, hi)
    return GrowthRateEstimate(float(rate[0]), (-n_back, -n_back + hi), float(conf[0]), "backward",
                              log_norms=logs[:, 0], final=states[-1][0] * np.exp(logs[-1, 0]),
                              aligned=states[1][0])


@dataclass(frozen=True)
class FilterClass:
    k: int
    direction: str
    rate: float
    matched_level: int
    matched_modulus: float
    alignment_angle: float
    psi: np.ndarray = field(repr=False)
    estimate: Optional[GrowthRateEstimate] = field(repr=False, default=None)


def level_moduli(spec: FloquetSpectrum) -> np.ndarray:
    return np.array([spec.level_modulus(j) for j in range(spec.resolved_levels)])


def match_level(rate: float, spec: FloquetSpectrum, band: float = AMBIGUITY_BAND) -> int:
    """Ladder level whose modulus the rate matches, within ``band`` of the log-gaps."""
    logs = np.log(level_moduli(spec))
    if len(logs) == 0:
        raise UnclassifiableError("empty ladder")
    lr = np.log(rate)
    for j, lj in enumerate(logs):
        gap_up = logs[j - 1] - lj if j > 0 else None
        gap_dn = lj - logs[j + 1] if j + 1 < len(logs) else None
        gap_up = gap_up if gap_up is not None else gap_dn
        gap_dn = gap_dn if gap_dn is not None else gap_up
        if gap_up is None:
            return j
        if lj - band * gap_dn <= lr <= lj + band * gap_up:
            return j
    raise UnclassifiableError(
        f"rate {rate:.6g} lies in a gap of the resolved ladder {np.exp(logs)}")


def eigenplane_angle(v: np.ndarray, spec: FloquetSpectrum, level: int,
                     alpha: float = ALPHA) -> float:
    """Angle (Hilbert X^alpha) between v and the real eigenspace of a level."""
    basis = spec.level_basis(level)
    G = fractional_inner(basis, basis, alpha)
    b = fractional_inner(basis, v, alpha)[:, 0]
    coef = np.linalg.solve(G, b)
    proj = coef @ basis
    vv = float(fractional_inner(v, v, alpha)[0, 0])
    rr = float(fractional_inner(v - proj, v - proj, alpha)[0, 0])
    return float(np.arcsin(min(1.0, np.sqrt(max(rr, 0.0) / vv))))


def classify_fk(lp: LinearProblem, cfg: StepperConfig, v0: StateVector,
                spec: FloquetSpectrum, direction: str = "forward", n_max: int = 60,
                band: float = AMBIGUITY_BAND, alpha: float = ALPHA) -> FilterClass:
    """Place v0 in the forward or backward filtration of ``lp``.

    Forward: the rate matches ladder level l, and v0 lies in F_k^+ for every
    k <= l; the largest such k (= l) is reported.  Backward: the rate matches
    level l, and psi = v(0) lies in F_k^- exactly for k > l; the sharpest
    statement is k = l + 1.
    """
    if direction == "forward":
        est = rho_forward(lp, cfg, v0, n_max, alpha)
        psi = v0.values
    elif direction == "backward":
        est = rho_backward(lp, cfg, v0, n_max, alpha)
        psi = est.final
    else:
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    level = match_level(est.rate, spec, band)
    angle = eigenplane_angle(est.aligned, spec, level, alpha)
    k = level if direction == "forward" else level + 1
    return FilterClass(k, direction, est.rate, level, spec.level_modulus(level), angle,
                       np.asarray(psi), est)


@dataclass
class FiltrationAudit:
    classified: list
    violations: list
    unclassifiable: list

    @property
    def passed(self) -> bool:
        return not self.violations


def zero_number_filtration_audit(lp: LinearProblem, cfg: StepperConfig, samples: Sequence,
                                 spec: FloquetSpectrum, direction: str = "forward",
                                 n_max: int = 60, tol: float = DEFAULT_TOL,
                                 band: float = AMBIGUITY_BAND) -> FiltrationAudit:
    """Check z(psi) >= 2k on F_k^+ samples and z(psi) < 2k on F_k^- samples.

    A sample is a StateVector (classified here) or an existing FilterClass.
    """
    classified, violations, unclassifiable = [], [], []
    for i, s in enumerate(samples):
        if isinstance(s, FilterClass):
            fc = s
        else:
            try:
                fc = classify_fk(lp, cfg, s, spec, direction, n_max, band)
            except UnclassifiableError as exc:
                unclassifiable.append((i, str(exc)))
                continue
        z = zero_count_array(fc.psi, tol).count
        ok = z >= 2 * fc.k if fc.direction == "forward" else z < 2 * fc.k
        classified.append((i, fc.k, fc.direction, z))
        if not ok:
            violations.append((i, fc.k, fc.direction, z))
    return FiltrationAudit(classified, violations, unclassifiable)


@dataclass
class DimensionReport:
    k: int
    level_dims: list
    dim_low: int
    expected: int
    partial: bool

    @property
    def codim_forward(self) -> int:
        """Codimension of F_k^+, equal to dim(E_0 + ... + E_{k-1})."""
        return self.dim_low

    @property
    def dim_backward(self) -> int:
        """Dimension of F_k^-, the same count."""
        return self.dim_low

    @property
    def passed(self) -> bool:
        return not self.partial and self.dim_low == self.expected


def filtration_dimension_audit(spec: FloquetSpectrum, k: int) -> DimensionReport:
    """dim(E_0 + ... + E_{k-1}); equals 2k - 1 for a simple principal level and planar others."""
    if k < 1:
        raise ValueError("k must be at least 1")
    partial = spec.resolved_levels < k or (k > 1 and len(spec.level_indices(k - 1)) < 2)
    dims = [len(spec.level_indices(j)) for j in range(min(k, spec.resolved_levels))]
    return DimensionReport(k, dims, int(sum(dims)), 2 * k - 1, partial)
