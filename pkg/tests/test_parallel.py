"""Worker-pool additive solves agree with the in-process sweep."""

import numpy as np

from conftest import make_problem
from dydd.decomposition import IndexDecomposition, dd_solve
from dydd.estimation import cls_solve
from dydd.parallel import AdditiveWorkerPool


def test_pool_matches_inprocess_additive(rng):
    prob = make_problem(rng, 24)
    deco = IndexDecomposition.contiguous(24, 2)
    ref = dd_solve(prob, deco, mode="additive")
    with AdditiveWorkerPool(prob, deco) as pool:
        out = pool.solve()
    assert out.converged
    assert out.iterations == ref.iterations
    assert np.max(np.abs(out.x - ref.x)) < 1e-10


def test_pool_with_overlap_and_reset(rng):
    prob = make_problem(rng, 20)
    deco = IndexDecomposition.contiguous(20, 2, overlap=2)
    ref = cls_solve(prob)
    with AdditiveWorkerPool(prob, deco, mu=1.0) as pool:
        first = pool.solve()
        pool.reset()
        second = pool.solve()
    assert first.converged and second.converged
    assert np.array_equal(first.x, second.x)
    assert np.max(np.abs(first.x - ref)) < 1e-8


def test_pool_thread_fallback_kind(rng):
    prob = make_problem(rng, 16)
    deco = IndexDecomposition.contiguous(16, 4)
    with AdditiveWorkerPool(prob, deco, kind="thread") as pool:
        out = pool.solve()
    assert out.converged
    assert np.max(np.abs(out.x - cls_solve(prob))) < 1e-8
