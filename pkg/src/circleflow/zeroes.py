"""Zero number of functions on the circle, counted as sign changes.

Counting sign changes of the trigonometric interpolant (rather than literal
roots) makes the count stable under perturbation: a tangential touch adds
nothing, and the result is always even.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFunctionError
from .grid import TWO_PI, StateVector, _trig_eval, refine_array

DEFAULT_TOL = 1e-9
DEGENERATE_SUP = 1e-13
BISECTION_DEPTH = 60
OVERSAMPLE = 4


@dataclass(frozen=True)
class ZeroCount:
    count: int
    all_simple: bool
    min_slope_at_zero: float
    tolerance_used: float
    zeros: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.count % 2:
            raise AssertionError("sign changes around a circle come in pairs")


def zero_count(s: StateVector, tol: float = DEFAULT_TOL) -> ZeroCount:
    """Number of sign changes of the interpolant of ``s``.

    ``tol`` is relative to the sup-norm: nodal values below ``tol * sup`` are
    treated as indeterminate, and a located zero is simple when the slope of
    the interpolant there exceeds the same threshold.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return zero_count_array(s.values, tol)


def zero_count_array(values: np.ndarray, tol: float = DEFAULT_TOL) -> ZeroCount:
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    sup = float(np.max(np.abs(values)))
    if sup < DEGENERATE_SUP:
        raise DegenerateFunctionError("zero number undefined for the zero function")
    thresh = tol * sup

    m = OVERSAMPLE * n
    fine = refine_array(values, m)
    sign = np.where(fine > thresh, 1, np.where(fine < -thresh, -1, 0))
    det = np.flatnonzero(sign)
    xs = TWO_PI * np.arange(m) / m
    had_gap = bool(len(det) < m)
    if len(det) == 0:
        return ZeroCount(0, False, 0.0, thresh)

    s_det = sign[det]
    nxt = np.roll(np.arange(len(det)), -1)
    changes = np.flatnonzero(s_det != s_det[nxt])
    # indeterminate runs flanked by equal signs may hide a double zero
    gaps = (det[nxt] - det) % m
    touch = np.any((gaps > 1) & (s_det == s_det[nxt]))
    if len(det) == 1:
        touch = had_gap

    if len(changes) == 0:
        return ZeroCount(0, not touch, float("inf"), thresh)

    c = np.fft.rfft(values) / n
    lo = xs[det[changes]]
    hi = xs[det[nxt[changes]]]
    hi = np.where(hi <= lo, hi + TWO_PI, hi)
    lo_sign = s_det[changes].astype(float)
    for _ in range(BISECTION_DEPTH):
        mid = 0.5 * (lo + hi)
        val = _trig_eval(c, n, mid)
        same = np.sign(val) == lo_sign
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    roots = np.mod(0.5 * (lo + hi), TWO_PI)
    slopes = np.abs(_trig_eval(c, n, roots, order=1))
    min_slope = float(slopes.min())
    simple = bool(min_slope > thresh) and not touch
    return ZeroCount(int(len(changes)), simple, min_slope, thresh, tuple(np.sort(roots)))


@dataclass
class ZeroHistory:
    times: np.ndarray
    counts: list
    monotone_ok: bool
    unexplained_violations: list
    flagged_violations: list

    def count_values(self) -> list[int]:
        return [zc.count for zc in self.counts]


def _history_from(times, arrays, tol) -> ZeroHistory:
    counts = []
    for t, v in zip(times, arrays):
        try:
            counts.append(zero_count_array(v, tol))
        except DegenerateFunctionError as exc:
            raise DegenerateFunctionError(str(exc), time=float(t)) from exc
    strict, flagged = [], []
    for i in range(1, len(counts)):
        if counts[i].count > counts[i - 1].count:
            pair = (float(times[i - 1]), float(times[i]))
            if counts[i].all_simple and counts[i - 1].all_simple:
                strict.append(pair)
            else:
                flagged.append(pair)
    return ZeroHistory(np.asarray(times, dtype=float), counts,
                       monotone_ok=not strict and not flagged,
                       unexplained_violations=strict, flagged_violations=flagged)


def zero_history(traj, sample_dt: float, tol: float = DEFAULT_TOL) -> ZeroHistory:
    """Zero counts of a (linear) trajectory every ``sample_dt`` time units."""
    times = traj.times
    t0 = times[0]
    span = times[-1] - t0
    n_samples = int(np.floor(span / sample_dt + 1e-9))
    targets = t0 + sample_dt * np.arange(n_samples + 1)
    idx = np.unique(np.searchsorted(times, targets - 1e-9 * max(1.0, span)))
    idx = idx[idx < len(times)]
    return _history_from(times[idx], [traj.states[i].values for i in idx], tol)


def zero_history_arrays(times, arrays, tol: float = DEFAULT_TOL) -> ZeroHistory:
    return _history_from(times, arrays, tol)


@dataclass
class DropReport:
    intervals: list
    plateau: int
    simple_from: float | None


def dropping_times(history) -> DropReport:
    """Sample intervals (t_i, t_{i+1}] on which the count strictly drops.

    Accepts a ZeroHistory or a sequence of (time, ZeroCount | int) pairs.
    """
    if isinstance(history, ZeroHistory):
        pairs = list(zip(history.times, history.counts))
    else:
        pairs = list(history)
    times = [float(t) for t, _ in pairs]
    counts = [c.count if isinstance(c, ZeroCount) else int(c) for _, c in pairs]
    simple = [c.all_simple if isinstance(c, ZeroCount) else True for _, c in pairs]
    intervals = [(times[i - 1], times[i]) for i in range(1, len(counts))
                 if counts[i] < counts[i - 1]]
    simple_from = None
    for i in range(len(simple) - 1, -1, -1):
        if not simple[i]:
            break
        simple_from = times[i]
    return DropReport(intervals, counts[-1] if counts else 0, simple_from)
