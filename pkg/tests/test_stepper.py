import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from circleflow.errors import BlowUpError, PreconditionError
from circleflow.grid import CircleGrid, StateVector
from circleflow.stepper import (Dissipativity, Nonlinearity, StepperConfig, check_dissipativity,
                                dp_apply, envelope_constant, evolve, fit_decay_rate, poincare,
                                poincare_iterates, sign_condition_holds, tangent_evolve)

SCHEMES = ["etdrk4", "imex_bdf2"]


def nl_zero(T=1.0):
    return Nonlinearity(lambda t, y, z: 0.0 * y, lambda t, y, z: 0.0 * y, lambda t, y, z: 0.0 * y, T)


def nl_linear(c=-1.0, T=1.0):
    return Nonlinearity(lambda t, y, z: c * y, lambda t, y, z: c + 0 * y, lambda t, y, z: 0 * y, T)


def nl_chafee(T=1.0, forced=False):
    a = (lambda t: 2 + 0.5 * np.cos(2 * np.pi * t / T)) if forced else (lambda t: 2.0 + 0 * t)
    return Nonlinearity(lambda t, y, z: a(t) * y - y ** 3,
                        lambda t, y, z: a(t) - 3 * y ** 2,
                        lambda t, y, z: 0 * y, T)


def nl_advective(T=1.0):
    return Nonlinearity(lambda t, y, z: y - y ** 3 + 0.3 * z + 0.2 * np.sin(2 * np.pi * t / T) * z * y,
                        lambda t, y, z: 1 - 3 * y ** 2 + 0.2 * np.sin(2 * np.pi * t / T) * z,
                        lambda t, y, z: 0.3 + 0.2 * np.sin(2 * np.pi * t / T) * y, T)


def test_validate_rejects_wrong_partial():
    with pytest.raises(ValueError, match="df_dy"):
        Nonlinearity(lambda t, y, z: y ** 2, lambda t, y, z: y, lambda t, y, z: 0 * y, 1.0)


def test_validate_rejects_non_periodic_f():
    with pytest.raises(ValueError, match="periodic"):
        Nonlinearity(lambda t, y, z: t * y, lambda t, y, z: t + 0 * y, lambda t, y, z: 0 * y, 1.0)


def test_validate_rejects_false_symmetry_claim():
    with pytest.raises(ValueError, match="symmetric"):
        Nonlinearity(lambda t, y, z: z, lambda t, y, z: 0 * y, lambda t, y, z: 1 + 0 * z, 1.0,
                     symmetric_in_z=True)


def test_dt_must_divide_period():
    with pytest.raises(PreconditionError):
        poincare(CircleGrid(16).constant(1.0), nl_zero(1.0), StepperConfig(0.3))


@pytest.mark.parametrize("scheme,tol", [("etdrk4", 1e-13), ("imex_bdf2", 5e-3)])
def test_heat_modes(scheme, tol):
    # f = 0: exponential integration is exact, BDF2 carries O(dt^2) damping error
    g = CircleGrid(32)
    u0 = g.sample(lambda x: 1 + np.cos(x) + 0.5 * np.sin(3 * x))
    u1 = poincare(u0, nl_zero(0.5), StepperConfig(0.05, scheme))
    x = g.nodes
    exact = 1 + np.exp(-0.5) * np.cos(x) + 0.5 * np.exp(-4.5) * np.sin(3 * x)
    assert np.max(np.abs(u1.values - exact)) <= tol


def test_linear_damping_mode_etdrk4():
    # f = -y: mode k decays like exp(-(k^2 + 1) t)
    g = CircleGrid(32)
    u0 = g.sample(lambda x: np.cos(2 * x))
    u1 = poincare(u0, nl_linear(-1.0), StepperConfig(0.01, "etdrk4"))
    assert np.max(np.abs(u1.values - np.exp(-5.0) * np.cos(2 * g.nodes))) <= 1e-10


@pytest.mark.parametrize("forced", [False, True])
def test_constant_states_follow_scalar_ode(forced):
    # oracle: scipy's adaptive RK on the ODE y' = f(t, y, 0)
    nl = nl_chafee(forced=forced)
    for y0 in (-1.7, 0.3, 1.1):
        ref = solve_ivp(lambda t, y: nl.f(t, y, 0.0), (0.0, 1.0), [y0], rtol=1e-12, atol=1e-14).y[0, -1]
        u1 = poincare(CircleGrid(16).constant(y0), nl, StepperConfig(0.01, "etdrk4"))
        assert np.max(np.abs(u1.values - ref)) <= 1e-8


def test_bdf2_converges_at_second_order():
    nl = nl_chafee()
    y0 = 0.3
    ref = solve_ivp(lambda t, y: nl.f(t, y, 0.0), (0.0, 1.0), [y0], rtol=1e-12, atol=1e-14).y[0, -1]
    errs = [abs(poincare(CircleGrid(8).constant(y0), nl, StepperConfig(dt, "imex_bdf2")).values[0] - ref)
            for dt in (0.02, 0.01, 0.005)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8) and np.all(orders < 2.2)


def test_etdrk4_agrees_with_refined_self():
    g = CircleGrid(64)
    nl = nl_advective()
    u0 = g.sample(lambda x: 0.8 * np.cos(x) + 0.3 * np.sin(2 * x))
    coarse = poincare(u0, nl, StepperConfig(0.02, "etdrk4")).values
    fine = poincare(u0, nl, StepperConfig(0.005, "etdrk4")).values
    assert np.max(np.abs(coarse - fine)) <= 1e-7


@pytest.mark.parametrize("scheme", SCHEMES)
def test_dp_matches_central_differences(scheme):
    g = CircleGrid(32)
    nl = nl_advective()
    cfg = StepperConfig(0.02, scheme)
    u = g.sample(lambda x: 0.5 + 0.7 * np.cos(x + 0.2))
    v = g.sample(lambda x: np.sin(2 * x) - 0.4 * np.cos(x))
    eps = 1e-6
    fd = (poincare(u + v * eps, nl, cfg).values - poincare(u - v * eps, nl, cfg).values) / (2 * eps)
    assert np.max(np.abs(dp_apply(u, v, nl, cfg).values - fd)) <= 1e-7


def test_tangent_evolve_along_trajectory_ends_at_dp():
    g = CircleGrid(32)
    nl, cfg = nl_chafee(forced=True), StepperConfig(0.02, "etdrk4")
    u = g.sample(lambda x: 0.3 * np.cos(x))
    v = g.sample(lambda x: np.cos(2 * x))
    traj = evolve(u, nl, cfg)
    tang = tangent_evolve(traj, v)
    assert len(tang.states) == len(traj.states) == 51
    assert np.max(np.abs(tang.final.values - dp_apply(u, v, nl, cfg).values)) <= 1e-13


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_dp_is_linear(a, b, seed):
    g = CircleGrid(16)
    rng = np.random.default_rng(seed)
    nl, cfg = nl_chafee(), StepperConfig(0.05, "etdrk4")
    u = g.sample(lambda x: 0.5 * np.cos(x))
    v, w = (StateVector(g, rng.standard_normal(16)) for _ in range(2))
    lhs = dp_apply(u, v * a + w * b, nl, cfg).values
    rhs = a * dp_apply(u, v, nl, cfg).values + b * dp_apply(u, w, nl, cfg).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_spatial_translation_commutes_with_flow():
    # f does not depend on x, so rotations of the circle are symmetries
    g = CircleGrid(32)
    nl, cfg = nl_advective(), StepperConfig(0.02, "etdrk4")
    u = StateVector(g, np.random.default_rng(0).uniform(-1, 1, 32))
    shifted = StateVector(g, np.roll(u.values, 5))
    a = np.roll(poincare(u, nl, cfg).values, 5)
    b = poincare(shifted, nl, cfg).values
    assert np.max(np.abs(a - b)) <= 1e-12


def test_blowup_is_reported():
    nl = Nonlinearity(lambda t, y, z: y ** 2, lambda t, y, z: 2 * y, lambda t, y, z: 0 * y, 1.0)
    with pytest.raises(BlowUpError) as info:
        poincare_iterates(CircleGrid(8).constant(2.0), nl, StepperConfig(0.01, "etdrk4"), 2)
    # y' = y^2 from 2 explodes at t = 0.5
    assert 0.4 <= info.value.last_time <= 0.5


def test_fit_decay_rate_recovers_exponent():
    t = np.linspace(0, 5, 101)
    zeta, C = fit_decay_rate(t, 0.6 + 3.0 * np.exp(-2.0 * t), 0.6)
    assert abs(zeta - 2.0) <= 1e-10 and abs(C - 3.0) <= 1e-9
    assert envelope_constant(t, 0.6 + 3.0 * np.exp(-2.0 * t), 0.6, 2.0) == pytest.approx(3.0, rel=1e-12)


def test_fit_decay_rate_inside_ball_is_infinite():
    zeta, _ = fit_decay_rate(np.linspace(0, 1, 5), np.full(5, 0.1), 0.5)
    assert zeta == np.inf


def test_sign_condition_sampling():
    nl = Nonlinearity(lambda t, y, z: -y ** 3 + 0.2 * np.cos(2 * np.pi * t), lambda t, y, z: -3 * y ** 2,
                      lambda t, y, z: 0 * y, 1.0)
    assert sign_condition_holds(nl, 0.2 ** (1 / 3) * 1.001, 6.0)
    assert not sign_condition_holds(nl, 0.5, 6.0)


def test_dissipativity_small_example():
    dis = Dissipativity(0.0, lambda r: r ** 3 + 1, 0.2 ** (1 / 3) * (1 + 1e-6))
    nl = Nonlinearity(lambda t, y, z: -y ** 3 + 0.2 * np.cos(2 * np.pi * t), lambda t, y, z: -3 * y ** 2,
                      lambda t, y, z: 0 * y, 1.0, dissipativity=dis)
    g = CircleGrid(32)
    seeds = [g.sample(lambda x: 4 * np.cos(x)), g.constant(-3.0)]
    rep = check_dissipativity(nl, StepperConfig(0.01, "etdrk4"), seeds, horizon=5.0, cross_check=False)
    assert rep.passed and not rep.hypothesis_violated
    assert all(s.entry_time <= 5.0 and s.zeta > 0 for s in rep.seeds)


def test_dissipativity_hypothesis_violation_is_flagged():
    dis = Dissipativity(0.0, lambda r: r + 1, 1.0)
    nl = Nonlinearity(lambda t, y, z: y, lambda t, y, z: 1 + 0 * y, lambda t, y, z: 0 * y, 1.0,
                      dissipativity=dis)
    rep = check_dissipativity(nl, StepperConfig(0.1), [CircleGrid(8).constant(1.5)], horizon=1.0)
    assert rep.hypothesis_violated and rep.passed is None
