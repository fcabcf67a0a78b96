import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dotsaa.tregs import TrOptions, TrState, gcv_scores, gn_step, tr_loop


def test_linear_problem_one_iteration(rng):
    J = rng.standard_normal((12, 4)) + 3 * np.eye(12, 4)
    p_star = rng.standard_normal(4)
    p0 = np.zeros(4)
    state = TrState(p0, delta=1e6)
    tr_loop(state, lambda p: J @ (p - p_star), lambda p: J, TrOptions(tol=1e-20, max_iter=5))
    np.testing.assert_allclose(state.history[1]["misfit"], 0.0, atol=1e-20)
    np.testing.assert_allclose(state.p, p_star, atol=1e-12)
    assert state.iteration == 1


def test_gcv_drops_tiny_singular_value():
    U = np.linalg.qr(np.random.default_rng(0).standard_normal((2, 2)))[0]
    J = U @ np.diag([1.0, 1e-8])
    r = 0.3 * U[:, 0]
    s = np.array([1.0, 1e-8])
    beta = U.T @ r
    scores = gcv_scores(s, beta, float(r @ r), 2)
    assert scores[0] == pytest.approx(0.0, abs=1e-20)
    step = gn_step(J, r, 1e6)
    assert step.k_gcv == 1 and step.k == 1
    np.testing.assert_allclose(step.step, -0.3 * np.array([1.0, 0.0]), atol=1e-12)


def test_boundary_scaling():
    J = np.eye(3)
    r = np.array([-1.0, 0.0, 0.0])           # full GN step has norm 1
    st_ = gn_step(J, r, 0.1)
    assert np.linalg.norm(st_.step) == pytest.approx(0.1)
    assert st_.tr_active


@given(st.integers(0, 10**6), st.floats(1e-3, 10.0))
@settings(max_examples=50, deadline=None)
def test_step_norm_never_exceeds_radius(seed, delta):
    r_ = np.random.default_rng(seed)
    J = r_.standard_normal((8, 5)) @ np.diag(10.0 ** r_.uniform(-4, 1, 5))
    r = r_.standard_normal(8)
    st_ = gn_step(J, r, delta)
    assert np.linalg.norm(st_.step) <= delta * (1 + 1e-12)
    assert st_.predicted >= -1e-12


def test_null_jacobian():
    st_ = gn_step(np.zeros((3, 2)), np.ones(3), 1.0)
    assert st_.null and np.all(st_.step == 0)
    state = tr_loop(TrState(np.zeros(2)), lambda p: np.ones(3), lambda p: np.zeros((3, 2)))
    assert state.status == "null_step"


def test_mismatched_residual():
    with pytest.raises(ValueError):
        gn_step(np.ones((3, 2)), np.ones(4), 1.0)


def rosenbrock(p):
    return np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]])


def rosenbrock_jac(p):
    return np.array([[-20 * p[0], 10.0], [-1.0, 0.0]])


def test_rosenbrock():
    state = TrState(np.array([-1.2, 1.0]), delta=1.0)
    tr_loop(state, rosenbrock, rosenbrock_jac, TrOptions(tol=1e-10, max_iter=60))
    assert state.status == "converged"
    assert state.misfit < 1e-10
    assert state.iteration <= 60
    np.testing.assert_allclose(state.p, [1.0, 1.0], atol=1e-4)


def test_tolerance_met_at_start():
    calls = []
    state = TrState(np.array([1.0, 1.0]))
    tr_loop(state, rosenbrock, lambda p: calls.append(p) or rosenbrock_jac(p), TrOptions(tol=1e-6))
    assert state.status == "converged" and state.iteration == 0
    assert len(state.history) == 1 and not calls


def test_max_iter_zero():
    state = tr_loop(TrState(np.array([-1.2, 1.0])), rosenbrock, rosenbrock_jac,
                    TrOptions(max_iter=0))
    assert state.status == "max_iter" and state.iteration == 0


def test_non_finite_trial_is_rejected():
    def res(p):
        if p[0] > 0.5:
            return np.array([np.nan])
        return np.array([p[0] - 2.0])
    state = TrState(np.array([0.0]), delta=10.0)
    tr_loop(state, res, lambda p: np.array([[1.0]]), TrOptions(max_iter=3))
    assert state.history[1]["accepted"] is False
    assert state.delta < 10.0


def test_callback_can_stop():
    state = TrState(np.array([-1.2, 1.0]))
    tr_loop(state, rosenbrock, rosenbrock_jac, TrOptions(tol=1e-12),
            callback=lambda s, row: s.iteration >= 3)
    assert state.status == "callback" and state.iteration >= 3


def test_refresh_called_every_iteration():
    count = [0]

    def refresh():
        count[0] += 1
    state = TrState(np.array([-1.2, 1.0]))
    tr_loop(state, rosenbrock, rosenbrock_jac, TrOptions(tol=0.0, max_iter=5), refresh=refresh)
    assert state.status == "max_iter"
    assert count[0] == 4


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_accepted_misfits_strictly_decrease(seed):
    r_ = np.random.default_rng(seed)
    A = r_.standard_normal((6, 3))
    b = r_.standard_normal(6)

    def res(p):
        return A @ np.sin(p) - b

    def jac(p):
        return A * np.cos(p)[None, :]
    state = TrState(r_.standard_normal(3), delta=r_.uniform(0.05, 2))
    tr_loop(state, res, jac, TrOptions(tol=0.0, max_iter=30))
    acc = [row["misfit"] for row in state.history if row["accepted"]]
    assert all(b_ < a_ for a_, b_ in zip(acc, acc[1:]))
