import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleflow.errors import GridMismatchError, InvalidStateError, UnsupportedCoarsenError
from circleflow.grid import (CircleGrid, StateVector, fractional_inner, fractional_norm,
                             fractional_norm_array, interpolate, interpolate_many, l2_norm,
                             orthonormalize, refine, spectral_derivative)

SIZES = st.sampled_from([8, 16, 32, 64, 128])


def band_limited(grid, rng, k_max=None):
    k_max = k_max if k_max is not None else grid.n_points // 2 - 1
    x = grid.nodes
    v = rng.standard_normal()
    for k in range(1, k_max + 1):
        v = v + rng.standard_normal() * np.cos(k * x) + rng.standard_normal() * np.sin(k * x)
    return StateVector(grid, v)


def test_grid_invariants():
    g = CircleGrid(64)
    assert abs(g.spacing * g.n_points - 2 * np.pi) <= np.spacing(2 * np.pi)
    assert g.nodes[0] == 0.0 and len(g.nodes) == 64
    assert g.full_wavenumbers.min() == -31 and g.full_wavenumbers.max() == 32


@pytest.mark.parametrize("n", [6, 7, 12, 0, -8])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(InvalidStateError):
        CircleGrid(n)


def test_state_rejects_non_finite_and_wrong_length():
    g = CircleGrid(8)
    with pytest.raises(InvalidStateError):
        StateVector(g, np.r_[np.zeros(7), np.nan])
    with pytest.raises(InvalidStateError):
        StateVector(g, np.zeros(9))


def test_grid_mismatch_is_an_error():
    with pytest.raises(GridMismatchError):
        CircleGrid(8).zeros() + CircleGrid(16).zeros()


def test_derivative_examples():
    g = CircleGrid(64)
    d1 = spectral_derivative(g.sample(np.sin), 1)
    assert np.max(np.abs(d1.values - np.cos(g.nodes))) <= 1e-12
    d2 = spectral_derivative(g.sample(lambda x: np.cos(2 * x)), 2)
    assert np.max(np.abs(d2.values + 4 * np.cos(2 * g.nodes))) <= 1e-12
    assert np.max(np.abs(spectral_derivative(g.constant(3.0), 1).values)) <= 1e-14


def test_derivative_order_checked():
    with pytest.raises(ValueError):
        spectral_derivative(CircleGrid(8).zeros(), 3)


@given(SIZES, st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=40, deadline=None)
def test_derivative_is_linear(n, seed, a, b):
    g = CircleGrid(n)
    rng = np.random.default_rng(seed)
    u, v = band_limited(g, rng), band_limited(g, rng)
    for order in (1, 2):
        lhs = spectral_derivative(u * a + v * b, order).values
        rhs = a * spectral_derivative(u, order).values + b * spectral_derivative(v, order).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_interpolation_examples():
    g = CircleGrid(64)
    assert abs(interpolate(g.sample(lambda x: np.sin(3 * x)), np.pi / 6) - 1.0) <= 1e-12
    s = g.sample(lambda x: np.sin(x) + 0.5 * np.cos(4 * x))
    assert abs(interpolate(s, 0.3) - (np.sin(0.3) + 0.5 * np.cos(1.2))) <= 1e-12


@given(SIZES, st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_interpolation_reproduces_nodes(n, seed):
    g = CircleGrid(n)
    s = StateVector(g, np.random.default_rng(seed).standard_normal(n))
    assert np.max(np.abs(interpolate_many(s, g.nodes) - s.values)) <= 1e-12 * (1 + np.max(np.abs(s.values)))


def test_refine_examples():
    coarse = CircleGrid(16).sample(np.cos)
    fine = refine(coarse, 64)
    assert np.max(np.abs(fine.values - np.cos(fine.grid.nodes))) <= 1e-12
    assert np.array_equal(refine(coarse, 16).values, coarse.values)
    with pytest.raises(UnsupportedCoarsenError):
        refine(coarse, 8)


@given(st.sampled_from([8, 16, 32]), st.sampled_from([2, 4]), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_refine_matches_direct_resampling(n, factor, seed):
    # oracle: evaluate the band-limited formula directly on the fine grid
    rng = np.random.default_rng(seed)
    ks = np.arange(1, n // 2)
    a, b, c0 = rng.standard_normal(len(ks)), rng.standard_normal(len(ks)), rng.standard_normal()

    def field(x):
        return c0 + np.cos(np.outer(x, ks)) @ a + np.sin(np.outer(x, ks)) @ b

    coarse = CircleGrid(n).sample(field)
    fine = refine(coarse, n * factor)
    assert np.max(np.abs(fine.values - field(fine.grid.nodes))) <= 1e-12 * (1 + np.abs(fine.values).max())
    assert np.max(np.abs(fine.values[::factor] - coarse.values)) <= 1e-12 * (1 + np.abs(coarse.values).max())
    assert abs(fractional_norm(fine) - fractional_norm(coarse)) <= 1e-10 * fractional_norm(coarse)


def test_fractional_norm_examples():
    g = CircleGrid(64)
    for alpha in (0.0, 0.3, 0.875, 1.0):
        assert abs(fractional_norm(g.constant(-2.5), alpha) - 2.5 * np.sqrt(2 * np.pi)) <= 1e-12
        for k in (1, 3, 7):
            s = g.sample(lambda x: np.sin(k * x))
            assert abs(fractional_norm(s, alpha) - (k ** (2 * alpha) + 1) * np.sqrt(np.pi)) <= 1e-10


def test_fractional_norm_direct_sum_oracle():
    # oracle: full complex FFT, signed wavenumbers, explicit sums
    g = CircleGrid(32)
    s = g.sample(lambda x: 0.7 + np.sin(x) - 0.3 * np.cos(5 * x) + 0.1 * np.sin(11 * x) + 0.05 * np.cos(16 * x))
    c = np.fft.fft(s.values) / 32
    k = np.abs(np.fft.fftfreq(32, 1 / 32))
    a = 0.875
    expect = (np.sqrt(2 * np.pi * np.sum(np.where(k > 0, k ** (4 * a), 0) * np.abs(c) ** 2))
              + np.sqrt(2 * np.pi * np.sum(np.abs(c) ** 2)))
    assert abs(fractional_norm(s, a) - expect) <= 1e-10 * expect


@given(SIZES, st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_alpha_zero_is_twice_l2_on_mean_zero_fields(n, seed):
    # A^0 is the identity off the constants, so the identity needs zero mean
    g = CircleGrid(n)
    v = np.random.default_rng(seed).standard_normal(n)
    s = StateVector(g, v - v.mean())
    assert abs(fractional_norm(s, 0.0) - 2 * l2_norm(s)) <= 1e-12 * (1 + l2_norm(s))


def test_alpha_zero_with_mean_counts_constant_once():
    s = CircleGrid(16).constant(1.0)
    assert abs(fractional_norm(s, 0.0) - l2_norm(s)) <= 1e-12


@given(SIZES, st.integers(0, 2 ** 32 - 1), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=30, deadline=None)
def test_fractional_norm_monotone_in_alpha(n, seed, a1, a2):
    g = CircleGrid(n)
    v = np.random.default_rng(seed).standard_normal(n)
    s = StateVector(g, v - v.mean())
    lo, hi = sorted((a1, a2))
    assert fractional_norm(s, lo) <= fractional_norm(s, hi) * (1 + 1e-12)


def test_fractional_norm_alpha_range():
    with pytest.raises(ValueError):
        fractional_norm(CircleGrid(8).zeros(), 1.5)


def test_stack_norm_matches_rowwise():
    g = CircleGrid(32)
    rows = np.random.default_rng(3).standard_normal((5, 32))
    stacked = fractional_norm_array(rows)
    assert np.allclose(stacked, [fractional_norm(StateVector(g, r)) for r in rows], rtol=1e-14)


def test_orthonormalize_gives_identity_gram():
    rows = np.random.default_rng(4).standard_normal((6, 32))
    Q, R = orthonormalize(rows)
    assert np.max(np.abs(fractional_inner(Q, Q) - np.eye(6))) <= 1e-12
    assert np.max(np.abs(R.T @ Q - rows)) <= 1e-10


def test_inner_norm_equivalence():
    # Hilbert norm sqrt(<u,u>) lies within a factor sqrt(2) of the X^alpha norm
    rows = np.random.default_rng(5).standard_normal((20, 32))
    h = np.sqrt(np.diag(fractional_inner(rows, rows)))
    x = fractional_norm_array(rows)
    assert np.all(h <= x * (1 + 1e-12)) and np.all(x <= np.sqrt(2) * h * (1 + 1e-12))
