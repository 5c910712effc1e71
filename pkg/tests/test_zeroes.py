import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleflow.errors import DegenerateFunctionError
from circleflow.grid import CircleGrid, StateVector
from circleflow.stepper import Nonlinearity, StepperConfig, evolve
from circleflow.zeroes import (ZeroCount, dropping_times, zero_count, zero_count_array,
                               zero_history, zero_history_arrays)

# cos x + cos 3x under the heat flow: cos x (e^-t + e^-9t (4 cos^2 x - 3));
# the bracket has real roots iff e^{8t} <= 3
T_STAR = np.log(3.0) / 8.0


def heat_profile(t, x):
    return np.exp(-t) * np.cos(x) + np.exp(-9 * t) * np.cos(3 * x)


@pytest.mark.parametrize("k", range(0, 9))
def test_pure_modes(k):
    g = CircleGrid(64)
    zc = zero_count(g.sample(lambda x: np.cos(k * x) + (2.0 if k == 0 else 0.0)))
    assert zc.count == 2 * k and zc.all_simple
    if k:
        assert len(zc.zeros) == 2 * k
        assert np.allclose(np.cos(k * np.array(zc.zeros)), 0.0, atol=1e-12)


@given(st.integers(1, 7), st.floats(0, 2 * np.pi), st.floats(0.01, 100), st.sampled_from([32, 64]))
@settings(max_examples=50, deadline=None)
def test_count_invariant_under_phase_scale_and_sign(k, phase, scale, n):
    g = CircleGrid(n)
    s = g.sample(lambda x: scale * np.sin(k * x + phase))
    assert zero_count(s).count == 2 * k
    assert zero_count(s * -1.0).count == 2 * k


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 31))
@settings(max_examples=30, deadline=None)
def test_count_invariant_under_node_rotation(seed, shift):
    g = CircleGrid(64)
    x = g.nodes
    rng = np.random.default_rng(seed)
    v = sum(rng.standard_normal() * np.cos(k * x + rng.uniform(0, 6)) for k in range(6))
    a = zero_count_array(v)
    b = zero_count_array(np.roll(v, shift))
    if a.all_simple and b.all_simple:
        assert a.count == b.count


def test_count_is_even_by_construction():
    with pytest.raises(AssertionError):
        ZeroCount(3, True, 1.0, 1e-9)


def test_zero_function_is_degenerate():
    with pytest.raises(DegenerateFunctionError):
        zero_count(CircleGrid(16).zeros())


def test_tangential_touch_is_not_simple():
    zc = zero_count(CircleGrid(64).sample(lambda x: 1 + np.cos(x)))
    assert zc.count == 0 and not zc.all_simple


def test_sign_changes_between_nodes_are_found():
    # zeros at 0.05 and pi - 0.05 sit well inside node cells on N = 8
    zc = zero_count(CircleGrid(8).sample(lambda x: np.sin(x - 0.05)))
    assert zc.count == 2
    assert np.allclose(zc.zeros, [0.05, np.pi + 0.05], atol=1e-12)


def test_drop_time_of_closed_form_profile():
    g = CircleGrid(64)
    before = zero_count_array(heat_profile(T_STAR * 0.98, g.nodes))
    after = zero_count_array(heat_profile(T_STAR * 1.02, g.nodes))
    assert before.count == 6 and before.all_simple
    assert after.count == 2 and after.all_simple


def test_simulated_heat_drop_brackets_oracle():
    g = CircleGrid(64)
    nl = Nonlinearity(lambda t, y, z: 0 * y, lambda t, y, z: 0 * y, lambda t, y, z: 0 * y, 0.4)
    traj = evolve(g.sample(lambda x: heat_profile(0.0, x)), nl, StepperConfig(0.005, "etdrk4"))
    hist = zero_history(traj, 0.01)
    assert hist.monotone_ok
    assert hist.count_values()[0] == 6 and hist.count_values()[-1] == 2
    drops = dropping_times(hist)
    assert len(drops.intervals) == 1
    lo, hi = drops.intervals[0]
    assert lo < T_STAR <= hi and hi - lo <= 0.01 + 1e-12
    assert drops.plateau == 2


def test_history_flags_increase():
    g = CircleGrid(32)
    arrays = [np.cos(g.nodes), np.cos(3 * g.nodes)]
    hist = zero_history_arrays([0.0, 1.0], arrays)
    assert not hist.monotone_ok and hist.unexplained_violations == [(0.0, 1.0)]


def test_history_separates_non_simple_increase():
    g = CircleGrid(32)
    arrays = [1 + np.cos(g.nodes), np.cos(g.nodes)]
    hist = zero_history_arrays([0.0, 1.0], arrays)
    assert hist.unexplained_violations == [] and hist.flagged_violations == [(0.0, 1.0)]


def test_dropping_times_accepts_plain_pairs():
    rep = dropping_times([(0.0, 6), (0.1, 6), (0.2, 4), (0.3, 2), (0.4, 2)])
    assert rep.intervals == [(0.1, 0.2), (0.2, 0.3)] and rep.plateau == 2 and rep.simple_from == 0.0


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        zero_count(StateVector(CircleGrid(8), np.ones(8)), tol=0.0)
