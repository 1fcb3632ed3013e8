"""Core dense solves: SPD, weighted normal equations, Laplacian."""

import numpy as np
import pytest

from dydd.errors import DimensionMismatch, Disconnected, InconsistentRHS, NotSPD, RankDeficient
from dydd.linalg import laplacian_solve, spd_solve, weighted_normal_solve

# 8-subdomain reference processor graph (two clusters bridged by edge 2-4)
PAPER8_EDGES = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (4, 5), (5, 6), (5, 7), (6, 7)]
PAPER8_LOADS = np.array([5, 4, 6, 2, 5, 3, 5, 2], dtype=float)
# mean-zero solution of L lam = loads - 4, frozen from an independent
# pseudo-inverse computation
PAPER8_LAMBDA = np.array([1.875, 1.25, 1.5, 0.375, 0.5, -1.5, -1.5, -2.5])


def laplacian_of(edges, p):
    lap = np.zeros((p, p))
    for i, j in edges:
        lap[i, j] -= 1
        lap[j, i] -= 1
        lap[i, i] += 1
        lap[j, j] += 1
    return lap


def test_spd_identity():
    x = spd_solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(x, [1, 2, 3], atol=1e-14)


def test_spd_diagonal():
    x = spd_solve(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
    assert np.allclose(x, [1, 2], atol=1e-14)


def test_spd_recovers_known_solution():
    rng = np.random.default_rng(19)
    g = rng.standard_normal((6, 6))
    a = g.T @ g + np.eye(6)
    x_true = rng.standard_normal(6)
    x = spd_solve(a, a @ x_true)
    assert np.max(np.abs(x - x_true)) < 1e-10


def test_spd_residual_bound_random_sizes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 65))
        g = rng.standard_normal((n, n))
        a = g.T @ g + n * np.eye(n)
        b = rng.standard_normal(n)
        x = spd_solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b)


def test_spd_rejects_non_spd():
    with pytest.raises(NotSPD):
        spd_solve(np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([1.0, 1.0]))
    with pytest.raises(NotSPD):
        spd_solve(np.array([[1.0, 5.0], [0.0, 1.0]]), np.array([1.0, 1.0]))


def test_spd_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        spd_solve(np.eye(3), np.ones(2))
    with pytest.raises(DimensionMismatch):
        spd_solve(np.ones((2, 3)), np.ones(2))


def test_weighted_normal_consistent_stack():
    a = np.vstack([np.eye(2), np.eye(2)])
    b = np.array([1.0, 2.0, 1.0, 2.0])
    x = weighted_normal_solve(a, np.eye(4), b)
    assert np.allclose(x, [1, 2], atol=1e-12)


def test_weighted_normal_unweighted_mean():
    x = weighted_normal_solve(np.array([[1.0], [1.0]]), np.eye(2), np.array([1.0, 3.0]))
    assert np.allclose(x, [2.0], atol=1e-12)


def test_weighted_normal_weighted_mean():
    # (2*1 + 1*3) / (2 + 1), evaluated by hand from the closed form
    x = weighted_normal_solve(
        np.array([[1.0], [1.0]]), np.diag([2.0, 1.0]), np.array([1.0, 3.0])
    )
    assert np.allclose(x, [5.0 / 3.0], atol=1e-12)
    # diagonal representation must agree
    x2 = weighted_normal_solve(np.array([[1.0], [1.0]]), np.array([2.0, 1.0]), np.array([1.0, 3.0]))
    assert np.allclose(x2, x, atol=1e-15)


def test_weighted_normal_scale_invariance():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((12, 4))
    b = rng.standard_normal(12)
    w = rng.uniform(0.5, 2.0, 12)
    x1 = weighted_normal_solve(a, np.diag(w), b)
    x2 = weighted_normal_solve(a, np.diag(7.3 * w), b)
    assert np.max(np.abs(x1 - x2)) <= 1e-10 * max(1.0, np.max(np.abs(x1)))


def test_weighted_normal_rank_deficient():
    a = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(RankDeficient):
        weighted_normal_solve(a, np.eye(3), np.ones(3))


def test_weighted_normal_underdetermined_rejected():
    with pytest.raises(DimensionMismatch):
        weighted_normal_solve(np.ones((2, 3)), np.eye(2), np.ones(2))


def test_laplacian_two_node():
    lap = np.array([[1.0, -1.0], [-1.0, 1.0]])
    lam = laplacian_solve(lap, np.array([250.0, -250.0]))
    assert np.allclose(lam, [125.0, -125.0], atol=1e-10)


def test_laplacian_zero_rhs():
    lap = laplacian_of([(0, 1), (1, 2)], 3)
    assert np.allclose(laplacian_solve(lap, np.zeros(3)), 0.0)


def test_laplacian_eight_node_oracle():
    lap = laplacian_of(PAPER8_EDGES, 8)
    b = PAPER8_LOADS - PAPER8_LOADS.mean()
    assert np.allclose(b, [1, 0, 2, -2, 1, -1, 1, -2])
    lam = laplacian_solve(lap, b)
    # independent oracle: pseudo-inverse, gauge-fixed to mean zero
    oracle = np.linalg.pinv(lap) @ b
    oracle -= oracle.mean()
    assert np.max(np.abs(lam - oracle)) < 1e-9
    assert np.max(np.abs(lam - PAPER8_LAMBDA)) < 1e-9


def test_laplacian_mean_zero_and_residual():
    rng = np.random.default_rng(5)
    for _ in range(25):
        p = int(rng.integers(2, 33))
        edges = [(i, int(rng.integers(0, i))) for i in range(1, p)]
        extra = {(int(a), int(b)) for a, b in rng.integers(0, p, (p, 2)) if a != b}
        edges += [e for e in extra if e not in edges and (e[1], e[0]) not in edges]
        lap = laplacian_of(edges, p)
        b = rng.standard_normal(p)
        b -= b.mean()
        lam = laplacian_solve(lap, b)
        assert abs(lam.mean()) < 1e-12
        assert np.linalg.norm(lap @ lam - b) <= 1e-9 * np.linalg.norm(b)


def test_laplacian_gauge_invariance_of_differences():
    lap = laplacian_of(PAPER8_EDGES, 8)
    b = PAPER8_LOADS - PAPER8_LOADS.mean()
    lam = laplacian_solve(lap, b)
    shifted = lam + 42.0
    for i, j in PAPER8_EDGES:
        assert np.isclose(lam[i] - lam[j], shifted[i] - shifted[j], atol=1e-12)


def test_laplacian_inconsistent_rhs():
    lap = np.array([[1.0, -1.0], [-1.0, 1.0]])
    with pytest.raises(InconsistentRHS):
        laplacian_solve(lap, np.array([1.0, 1.0]))


def test_laplacian_disconnected():
    # two components: vertices {0,1} and {2,3}
    lap = laplacian_of([(0, 1), (2, 3)], 4)
    b = np.array([1.0, -1.0, 2.0, -2.0])
    with pytest.raises(Disconnected):
        laplacian_solve(lap, b)
