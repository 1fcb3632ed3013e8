"""CLS solvers and the sequential Kalman filter route."""

import numpy as np
import pytest

from conftest import make_problem
from dydd.errors import DimensionMismatch, SingularInnovation
from dydd.estimation import (
    CLSProblem,
    KFState,
    cls_objective,
    cls_solve,
    kf_assimilate_cls,
    kf_correct,
    kf_predict,
    stack,
    varkf_objective,
)


def tiny_problem(y1_val=1.0, r0=None, r1=None):
    return CLSProblem(
        H0=np.array([[1.0], [1.0]]),
        y0=np.array([1.0, 1.0]),
        H1=np.array([[1.0]]),
        y1=np.array([y1_val]),
        R0=r0 if r0 is not None else np.eye(2),
        R1=r1 if r1 is not None else np.eye(1),
    )


def test_stack_concatenation_and_shapes():
    prob = tiny_problem()
    a, b, r = stack(prob)
    assert a.shape == (3, 1)
    assert np.allclose(a, [[1.0], [1.0], [1.0]])
    assert np.allclose(b, [1.0, 1.0, 1.0])


def test_stack_block_diagonal_weights():
    prob = tiny_problem(r0=np.diag([2.0, 2.0]), r1=np.diag([3.0]))
    _, _, r = stack(prob)
    assert np.allclose(r, np.diag([2.0, 2.0, 3.0]))
    # diagonal representation stacks to a diagonal vector
    prob_d = tiny_problem(r0=np.array([2.0, 2.0]), r1=np.array([3.0]))
    _, _, rd = stack(prob_d)
    assert rd.ndim == 1 and np.allclose(rd, [2.0, 2.0, 3.0])


def test_objective_zero_at_exact_solution():
    prob = tiny_problem(y1_val=1.0)
    assert cls_objective(prob, np.array([1.0])) <= 1e-20


def test_objective_hand_value():
    # residuals (0, 0, -2) with unit weights -> J = 4
    prob = tiny_problem(y1_val=3.0)
    assert np.isclose(cls_objective(prob, np.array([1.0])), 4.0, atol=1e-12)


def test_objective_block_sum_identity(rng):
    prob = make_problem(rng, 12)
    x = rng.standard_normal(12)
    j = cls_objective(prob, x)
    t0 = np.sum((prob.H0 @ x - prob.y0) ** 2)
    t1 = np.sum((prob.H1 @ x - prob.y1) ** 2)
    assert np.isclose(j, t0 + t1, rtol=1e-12)


def test_cls_solve_consistent():
    prob = tiny_problem(y1_val=1.0)
    assert np.allclose(cls_solve(prob), [1.0], atol=1e-12)


def test_cls_solve_hand_value():
    # (1 + 1 + 1)^-1 (1 + 1 + 4) = 2
    prob = tiny_problem(y1_val=4.0)
    assert np.allclose(cls_solve(prob), [2.0], atol=1e-12)


def test_cls_solve_against_pinv_oracle(rng):
    prob = make_problem(rng, 8, m1=24)
    a, b, r = stack(prob)
    # independent route: minimum-norm least squares on the weighted system
    rw = np.sqrt(r)
    oracle = np.linalg.pinv(rw[:, None] * a) @ (rw * b)
    x = cls_solve(prob)
    assert np.max(np.abs(x - oracle)) < 1e-9


def test_cls_solve_normal_equation_residual(rng):
    prob = make_problem(rng, 16)
    a, b, r = stack(prob)
    x = cls_solve(prob)
    lhs = a.T @ (r * (a @ x))
    rhs = a.T @ (r * b)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


def test_objective_minimality_under_perturbations(rng):
    prob = make_problem(rng, 10)
    x_hat = cls_solve(prob)
    j_hat = cls_objective(prob, x_hat)
    for _ in range(100):
        d = rng.standard_normal(10)
        d /= np.linalg.norm(d)
        assert cls_objective(prob, x_hat + 1e-3 * d) >= j_hat - 1e-12


def test_kf_predict_static_model():
    state = KFState(x=np.array([1.0, -1.0]), P=np.eye(2), k=3)
    out = kf_predict(state, np.eye(2), np.zeros((2, 2)))
    assert np.allclose(out.x, state.x)
    assert np.allclose(out.P, state.P)
    assert out.k == 4


def test_kf_predict_hand_value():
    state = KFState(x=np.array([2.0]), P=np.array([[1.0]]))
    out = kf_predict(state, np.array([[3.0]]), np.array([[0.5]]))
    assert np.isclose(out.x[0], 6.0)
    assert np.isclose(out.P[0, 0], 9.5)


def test_kf_predict_preserves_psd(rng):
    for _ in range(20):
        n = int(rng.integers(1, 8))
        g = rng.standard_normal((n, n))
        p0 = g @ g.T
        m = rng.standard_normal((n, n))
        q = rng.standard_normal((n, n))
        q = q @ q.T
        out = kf_predict(KFState(x=np.zeros(n), P=p0), m, q)
        assert np.allclose(out.P, out.P.T)
        assert np.linalg.eigvalsh(out.P).min() > -1e-10


def test_kf_correct_zero_covariance_is_inert():
    state = KFState(x=np.array([1.5]), P=np.zeros((1, 1)), k=7)
    out = kf_correct(state, np.array([[1.0]]), np.eye(1), np.array([10.0]))
    assert np.allclose(out.x, state.x)
    assert np.allclose(out.P, 0.0)
    assert out.k == 7


def test_kf_correct_hand_value():
    state = KFState(x=np.array([0.0]), P=np.array([[1.0]]))
    out = kf_correct(state, np.array([[1.0]]), np.eye(1), np.array([2.0]))
    assert np.isclose(out.x[0], 1.0)  # gain 1/2 applied to innovation 2
    assert np.isclose(out.P[0, 0], 0.5)


def test_kf_correct_never_inflates_scalar_covariance(rng):
    for _ in range(50):
        p = float(rng.uniform(0.0, 5.0))
        r = float(rng.uniform(0.1, 5.0))
        h = float(rng.uniform(-2.0, 2.0))
        state = KFState(x=np.zeros(1), P=np.array([[p]]))
        out = kf_correct(state, np.array([[h]]), np.array([[r]]), np.array([1.0]))
        assert out.P[0, 0] <= p + 1e-12
        assert out.P[0, 0] >= -1e-12


def test_kf_correct_psd_random(rng):
    for _ in range(20):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        g = rng.standard_normal((n, n))
        state = KFState(x=rng.standard_normal(n), P=g @ g.T)
        h = rng.standard_normal((m, n))
        out = kf_correct(state, h, np.eye(m), rng.standard_normal(m))
        assert np.allclose(out.P, out.P.T)
        assert np.linalg.eigvalsh(out.P).min() > -1e-8


def test_kf_correct_singular_innovation():
    state = KFState(x=np.zeros(1), P=np.zeros((1, 1)))
    with pytest.raises(SingularInnovation):
        kf_correct(state, np.array([[1.0]]), np.zeros((1, 1)), np.array([1.0]))


def test_assimilate_single_observation_matches_cls():
    prob = tiny_problem(y1_val=4.0)
    x = kf_assimilate_cls(prob, block_size=1)
    assert np.max(np.abs(x - cls_solve(prob))) < 1e-12
    assert np.allclose(x, [2.0], atol=1e-12)


def test_assimilate_block_order_independence(rng):
    prob = make_problem(rng, 12, m1=30)
    x_rows = kf_assimilate_cls(prob, block_size=1)
    x_shot = kf_assimilate_cls(prob, block_size=prob.m1)
    x_mid = kf_assimilate_cls(prob, block_size=7)
    ref = cls_solve(prob)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(x_rows - x_shot)) <= 1e-9 * scale
    assert np.max(np.abs(x_mid - x_shot)) <= 1e-9 * scale
    assert np.max(np.abs(x_rows - ref)) <= 1e-9 * scale


def test_assimilate_equals_cls_many_problems():
    rng = np.random.default_rng(777)
    for _ in range(20):
        n = int(rng.integers(2, 33))
        prob = make_problem(rng, n, m1=int(rng.integers(1, 3 * n)))
        ref = cls_solve(prob)
        x = kf_assimilate_cls(prob, block_size=min(8, prob.m1))
        assert np.max(np.abs(x - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))


def test_assimilate_block_size_validation(rng):
    prob = make_problem(rng, 6, m1=4)
    with pytest.raises(DimensionMismatch):
        kf_assimilate_cls(prob, block_size=0)
    with pytest.raises(DimensionMismatch):
        kf_assimilate_cls(prob, block_size=5)


def test_varkf_exact_fit_is_zero(rng):
    m = rng.standard_normal((3, 3))
    x_hat = rng.standard_normal(3)
    x_next = m @ x_hat
    h = rng.standard_normal((2, 3))
    val = varkf_objective(x_next, x_hat, m, np.eye(3), h, np.eye(2), h @ x_next)
    assert val <= 1e-20


def test_varkf_hand_value():
    val = varkf_objective(
        np.array([2.0]),
        np.array([1.0]),
        np.array([[1.0]]),
        np.eye(1),
        np.array([[1.0]]),
        np.eye(1),
        np.array([3.0]),
    )
    assert np.isclose(val, 2.0)


def test_varkf_nonnegative(rng):
    for _ in range(20):
        val = varkf_objective(
            rng.standard_normal(4),
            rng.standard_normal(4),
            rng.standard_normal((4, 4)),
            np.eye(4),
            rng.standard_normal((3, 4)),
            np.eye(3),
            rng.standard_normal(3),
        )
        assert val >= 0.0


def test_problem_invariant_validation():
    with pytest.raises(DimensionMismatch):
        CLSProblem(
            H0=np.ones((2, 2)),  # not overdetermined
            y0=np.ones(2),
            H1=np.ones((1, 2)),
            y1=np.ones(1),
            R0=np.eye(2),
            R1=np.eye(1),
        )
