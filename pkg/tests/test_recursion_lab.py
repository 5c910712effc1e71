import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleflow.errors import GapViolationError, PreconditionError
from circleflow.recursion_lab import (PerturbedRecursion, appendix_trial, asymptotic_rate,
                                      bounded_solution_space, decaying_schedule, delta_lambda,
                                      dichotomy_classify, iterate, normalized_limit_set,
                                      random_gap_matrix, spectral_projections)

SEEDS = st.integers(0, 2 ** 32 - 1)


def eig_projection(S, a):
    # oracle: complex eigendecomposition, indicator of |lambda| > a
    lam, W = np.linalg.eig(S)
    return (W @ np.diag((np.abs(lam) > a).astype(float)) @ np.linalg.inv(W)).real


def gap_split(S):
    ev = np.abs(np.linalg.eigvals(S))
    return float(np.sqrt(ev[ev > 1].min() * ev[ev < 1].max()))


def brute_delta(S, R, lam, gap, n_max, horizon, direction="forward"):
    # oracle: the defining double sum, explicit powers, exact 2-norms, no truncation
    # S P + Q is invertible and agrees with S on range P, so this inverts U there
    Uinv = np.linalg.inv(S @ gap.P + gap.Q) @ gap.P
    ks = range(0, horizon) if direction == "forward" else range(-horizon, 0)
    ns = range(0, n_max + 1) if direction == "forward" else range(-n_max, 1)
    best = 0.0
    for n in ns:
        tot = 0.0
        for k1 in ks:                     # k1 = k - 1 indexes R
            k = k1 + 1
            if k <= n:
                M = np.linalg.matrix_power(gap.V, n - k) @ gap.Q * lam ** (k - n - 1)
            else:
                M = np.linalg.matrix_power(Uinv, k - n) @ gap.P * lam ** (k - n - 1)
            tot += np.linalg.norm(M @ R(k1), 2)
        best = max(best, tot)
    return best


@given(SEEDS)
@settings(max_examples=30, deadline=None)
def test_projections_match_eigendecomposition(seed):
    S, _ = random_gap_matrix(np.random.default_rng(seed))
    a = gap_split(S)
    gap = spectral_projections(S, a)
    assert np.max(np.abs(gap.P - eig_projection(S, a))) <= 1e-8 * max(1.0, np.abs(gap.P).max())
    chk = gap.check()
    assert max(chk.values()) <= 1e-10
    assert gap.rank_P == int(np.sum(np.abs(np.linalg.eigvals(S)) > a))
    assert np.max(np.abs(gap.U @ gap.U_inverse() - gap.P)) <= 1e-10


def test_projections_are_real_with_rotation_blocks():
    th = 0.7
    S = np.zeros((4, 4))
    S[:2, :2] = 2.0 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    S[2:, 2:] = np.diag([0.3, -0.5])
    gap = spectral_projections(S, 1.0)
    assert gap.P.dtype == float and np.allclose(gap.P, np.diag([1, 1, 0, 0]))
    assert (gap.a, gap.b) == (0.5, 2.0)


def test_gap_violations():
    S = np.diag([2.0, 1.0, 0.5])
    with pytest.raises(GapViolationError):
        spectral_projections(S, 1.0)
    with pytest.raises(GapViolationError):
        spectral_projections(S, 1.5, b=3.0)


def test_recursion_validation():
    with pytest.raises(ValueError):
        PerturbedRecursion(np.eye(3), None, np.ones(2))
    with pytest.raises(ValueError):
        PerturbedRecursion(np.eye(3), None, np.ones(3), direction="sideways")


def test_iterate_accumulates_logs_exactly():
    S = np.diag([3.0, 0.5])
    traj = iterate(PerturbedRecursion(S, None, np.array([1.0, 1.0])), 400)
    # 3^400 overflows nothing because norms are accumulated as logs
    assert abs(traj.log_norms[-1] - 400 * np.log(3.0)) <= 1e-9
    assert np.allclose(traj.unit[-1], [1.0, 0.0])


@given(SEEDS)
@settings(max_examples=10, deadline=None)
def test_unperturbed_rate_is_top_modulus(seed):
    rng = np.random.default_rng(seed)
    S, _ = random_gap_matrix(rng)
    rate = asymptotic_rate(PerturbedRecursion(S, None, rng.standard_normal(8)), 2000)
    assert abs(rate - np.abs(np.linalg.eigvals(S)).max()) <= 1e-3


def test_dichotomy_branches():
    S = np.diag([2.0, 1.5, 0.4, -0.3])
    gap = spectral_projections(S, 1.0)
    R = decaying_schedule(0.01 * np.ones((4, 4)), 0.7)
    up = dichotomy_classify(PerturbedRecursion(S, R, np.array([0.0, 1.0, 1.0, 1.0])), gap)
    assert up.branch == "i" and abs(up.rate - 2.0) < 0.02
    down = dichotomy_classify(PerturbedRecursion(S, None, np.array([0.0, 0.0, 1.0, 1.0])), gap)
    assert down.branch == "ii" and abs(down.rate - 0.4) < 0.01


def test_normalized_limit_set_aligns_with_band():
    S = np.diag([3.0, 1.2, 1.1, 0.2])
    rec = PerturbedRecursion(S, None, np.array([0.0, 1.0, 1.0, 1.0]))
    rep = normalized_limit_set(rec, (0.5, 2.0), n_max=300)
    assert rep.status == "aligned" and rep.rank == 2 and rep.max_distance <= 1e-6


def test_normalized_limit_set_needs_band_hypotheses():
    S = np.diag([3.0, 1.2, 0.2])
    rec = PerturbedRecursion(S, None, np.array([1.0, 1.0, 1.0]))
    assert normalized_limit_set(rec, (0.5, 2.0)).status == "inconclusive"


@given(SEEDS, st.sampled_from(["forward", "backward"]))
@settings(max_examples=8, deadline=None)
def test_delta_matches_brute_force_sum(seed, direction):
    rng = np.random.default_rng(seed)
    S, _ = random_gap_matrix(rng)
    lam = gap_split(S)
    gap = spectral_projections(S, lam)
    table = {k: 0.01 * rng.standard_normal((8, 8)) for k in range(-12, 12)}

    def R(k):
        return table.get(k, np.zeros((8, 8)))

    fast = delta_lambda(S, R, lam, gap, n_max=15, horizon=20, direction=direction)
    slow = brute_delta(S, R, lam, gap, n_max=15, horizon=20, direction=direction)
    assert abs(fast - slow) <= 1e-12 * slow


def test_delta_needs_lambda_in_gap():
    S = np.diag([2.0, 0.5])
    gap = spectral_projections(S, 1.0)
    with pytest.raises(PreconditionError):
        delta_lambda(S, lambda k: np.zeros((2, 2)), 3.0, gap)


@pytest.mark.parametrize("direction", ["forward", "backward"])
def test_bounded_space_dimension_without_perturbation(direction):
    S = np.diag([2.0, -1.7, 0.5, 0.3, 0.2])
    gap = spectral_projections(S, 1.0)
    rep = bounded_solution_space(S, None, 1.0, gap, direction)
    assert rep.passed and rep.delta == 0.0
    assert rep.dim == (3 if direction == "forward" else 2)


def test_bounded_space_rejects_large_delta():
    S = np.diag([2.0, 0.5])
    gap = spectral_projections(S, 1.0)
    with pytest.raises(PreconditionError):
        bounded_solution_space(S, decaying_schedule(2.0 * np.ones((2, 2)), 0.9), 1.0, gap)


@given(SEEDS)
@settings(max_examples=20, deadline=None)
def test_random_gap_matrix_moduli(seed):
    S, mods = random_gap_matrix(np.random.default_rng(seed))
    ev = np.sort(np.abs(np.linalg.eigvals(S)))
    assert np.allclose(ev, np.sort(mods), rtol=1e-8)
    assert np.any(ev > 1.5 - 1e-9) and np.all((ev <= 0.6 + 1e-9) | (ev >= 1.5 - 1e-9))


def test_appendix_trial_passes():
    trial = appendix_trial(np.random.default_rng(7))
    assert trial.passed
    assert trial.forward.dim == spectral_projections(trial.S_p, trial.lam).rank_Q
    assert max(trial.delta_forward, trial.delta_backward) < 1
