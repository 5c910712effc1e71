"""Uniform periodic grids on the circle R/2piZ and Fourier-based operations on them.

All spectral work goes through the real-to-complex FFT.  Coefficients are
normalised as ``c_k = rfft(u)[k] / N`` so that ``u(x) = sum_k c_k exp(ikx)``
with ``c_{-k} = conj(c_k)``; the Nyquist coefficient multiplies ``cos(N x / 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, InvalidStateError, UnsupportedCoarsenError

TWO_PI = 2.0 * np.pi


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CircleGrid:
    """N equispaced nodes x_i = 2 pi i / N."""

    n_points: int

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise InvalidStateError(f"n_points must be an integer, got {n!r}")
        if n < 8 or n % 2:
            raise InvalidStateError(f"n_points must be even and >= 8, got {n}")
        if not _is_power_of_two(int(n)):
            raise InvalidStateError(f"n_points must be a power of two, got {n}")
        object.__setattr__(self, "n_points", int(n))

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n_points

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.spacing * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers 0..N/2 matching the rfft layout."""
        k = np.arange(self.n_points // 2 + 1, dtype=float)
        k.flags.writeable = False
        return k

    @cached_property
    def full_wavenumbers(self) -> np.ndarray:
        """Signed integer wavenumbers 0, 1, ..., N/2, -N/2+1, ..., -1."""
        k = np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(int)
        k[self.n_points // 2] = self.n_points // 2
        return k

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep |k| < N/3."""
        m = (self.wavenumbers < self.n_points / 3.0).astype(float)
        m.flags.writeable = False
        return m

    def sample(self, fn) -> "StateVector":
        return StateVector(self, fn(self.nodes))

    def constant(self, c: float) -> "StateVector":
        return StateVector(self, np.full(self.n_points, float(c)))

    def zeros(self) -> "StateVector":
        return self.constant(0.0)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Nodal values of a real function on the circle."""

    grid: CircleGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1 or v.shape[0] != self.grid.n_points:
            raise InvalidStateError(
                f"expected {self.grid.n_points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidStateError("state contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    # arithmetic keeps grids honest; mixing grids is always an error
    def _other(self, other):
        if isinstance(other, StateVector):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return StateVector(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return StateVector(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return StateVector(self.grid, self._other(other) - self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, StateVector):
            raise TypeError("pointwise products of states are not supported")
        return StateVector(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return StateVector(self.grid, self.values / float(scalar))

    def __neg__(self):
        return StateVector(self.grid, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        return l2_norm(self)


def check_same_grid(a: StateVector, b: StateVector) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(
            f"grid mismatch: {a.grid.n_points} vs {b.grid.n_points} points")


def coefficients(s: StateVector) -> np.ndarray:
    return np.fft.rfft(s.values) / s.grid.n_points


def _multiplicity(n: int) -> np.ndarray:
    # how many signed wavenumbers each rfft slot stands for
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def spectral_derivative(s: StateVector, order: int = 1) -> StateVector:
    """Derivative of the trigonometric interpolant at the nodes.

    The Nyquist mode is dropped for odd orders.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    return StateVector(s.grid, derivative_array(s.values, order))


def derivative_array(values: np.ndarray, order: int) -> np.ndarray:
    """Array-level derivative along the last axis (used by the integrators)."""
    n = values.shape[-1]
    k = np.arange(n // 2 + 1, dtype=float)
    c = np.fft.rfft(values, axis=-1)
    if order == 1:
        mult = 1j * k
        mult[-1] = 0.0
    else:
        mult = -(k ** 2)
    return np.fft.irfft(c * mult, n=n, axis=-1)


def interpolate(s: StateVector, x: float) -> float:
    """Evaluate the trigonometric interpolant at an arbitrary point."""
    return float(interpolate_many(s, np.array([x]))[0])


def interpolate_many(s: StateVector, xs) -> np.ndarray:
    return _trig_eval(coefficients(s), s.grid.n_points, np.asarray(xs, dtype=float))


def _trig_eval(c: np.ndarray, n: int, xs: np.ndarray, order: int = 0) -> np.ndarray:
    k = np.arange(n // 2 + 1, dtype=float)
    phase = np.exp(1j * np.outer(xs, k))
    w = (1j * k) ** order if order else np.ones_like(k)
    terms = phase * (c * w)
    # interior modes stand for a conjugate pair, the end modes for themselves
    total = terms[:, 0].real + 2.0 * terms[:, 1:-1].real.sum(axis=1)
    if order % 2 == 0:
        total = total + (c[-1] * w[-1]).real * np.cos(n // 2 * xs)
    return total


def interpolant_derivative_many(s: StateVector, xs, order: int = 1) -> np.ndarray:
    return _trig_eval(coefficients(s), s.grid.n_points, np.asarray(xs, dtype=float), order)


def refine(s: StateVector, new_n: int) -> StateVector:
    """Zero-padded spectral upsampling to ``new_n`` points."""
    n = s.grid.n_points
    if new_n < n:
        raise UnsupportedCoarsenError(f"cannot coarsen from {n} to {new_n} points")
    new_grid = CircleGrid(new_n)
    if new_n == n:
        return StateVector(new_grid, s.values)
    return StateVector(new_grid, refine_array(s.values, new_n))


def refine_array(values: np.ndarray, new_n: int) -> np.ndarray:
    n = values.shape[-1]
    c = np.fft.rfft(values, axis=-1) / n
    padded = np.zeros(values.shape[:-1] + (new_n // 2 + 1,), dtype=complex)
    padded[..., : n // 2 + 1] = c
    # the coarse Nyquist cosine splits into a +-N/2 pair on the finer grid
    padded[..., n // 2] *= 0.5
    return np.fft.irfft(padded * new_n, n=new_n, axis=-1)


def l2_norm(s: StateVector) -> float:
    c = coefficients(s)
    w = _multiplicity(s.grid.n_points)
    return float(np.sqrt(TWO_PI * np.sum(w * np.abs(c) ** 2)))


def fractional_norm(s: StateVector, alpha: float = 0.875) -> float:
    """Discrete X^alpha norm ``||A^alpha u||_L2 + ||u||_L2`` with A = -d^2/dx^2."""
    return float(fractional_norm_array(s.values, alpha))


def fractional_norm_array(values: np.ndarray, alpha: float = 0.875) -> np.ndarray:
    """X^alpha norm along the last axis; accepts stacks of fields."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidStateError("state contains non-finite values")
    n = values.shape[-1]
    c2 = np.abs(np.fft.rfft(values, axis=-1) / n) ** 2
    w = _multiplicity(n)
    k = np.arange(n // 2 + 1, dtype=float)
    symbol = np.where(k > 0, k ** (4.0 * alpha), 0.0)
    a_part = np.sqrt(TWO_PI * np.sum(w * symbol * c2, axis=-1))
    l2_part = np.sqrt(TWO_PI * np.sum(w * c2, axis=-1))
    return a_part + l2_part


def fractional_inner_weights(n: int, alpha: float = 0.875) -> np.ndarray:
    """Weights of the Hilbert norm sqrt(sum w_k (1 + k^{4 alpha}) |c_k|^2).

    Used where an inner product is needed (orthonormalisation); it is
    equivalent to the X^alpha norm within a factor sqrt(2).
    """
    k = np.arange(n // 2 + 1, dtype=float)
    symbol = np.where(k > 0, k ** (4.0 * alpha), 0.0)
    return TWO_PI * _multiplicity(n) * (1.0 + symbol)


def fractional_inner(a: np.ndarray, b: np.ndarray, alpha: float = 0.875) -> np.ndarray:
    """Gram matrix of the rows of ``a`` and ``b`` in the Hilbert X^alpha inner product."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    n = a.shape[-1]
    w = fractional_inner_weights(n, alpha)
    ca = np.fft.rfft(a, axis=-1) / n
    cb = np.fft.rfft(b, axis=-1) / n
    return np.real((ca * w) @ cb.conj().T)


def orthonormalize(rows: np.ndarray, alpha: float = 0.875) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt (twice) in the Hilbert X^alpha inner product.

    Returns (Q, R) with ``rows = R.T @ Q`` and Q orthonormal.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    m = rows.shape[0]
    Q = np.zeros_like(rows)
    R = np.zeros((m, m))
    for i in range(m):
        v = rows[i].copy()
        for _ in range(2):
            if i:
                coef = fractional_inner(Q[:i], v, alpha)[:, 0]
                v -= coef @ Q[:i]
                R[:i, i] += coef
        nrm = float(np.sqrt(fractional_inner(v, v, alpha)[0, 0]))
        R[i, i] = nrm
        Q[i] = v / nrm if nrm > 0 else v
    return Q, R
