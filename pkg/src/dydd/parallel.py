"""Process-backed additive Schwarz solves for the timing experiments.

One single-worker pool per subdomain pins each column block to its own
process; the raw slice ships once at setup, and every sweep exchanges only
the global residual and the subdomain's current values. Local Gram
factorization happens lazily inside the worker on first use, i.e. inside the
timed solve, which is where that work belongs. Falls back to threads when
process pools are unavailable.
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass

import multiprocessing as mp
import numpy as np
import scipy.linalg

from .decomposition import DDSolveReport, IndexDecomposition, LocalSolution, assemble_global, _penalty_diag
from .errors import RankDeficient
from .estimation import CLSProblem, stack
from .linalg import weight_apply

log = logging.getLogger(__name__)

# per-block worker state, keyed by block index: separate processes each hold
# only their own entry, while the thread fallback shares the dict safely
_WORKER_STATE: dict[int, dict] = {}


@dataclass
class _LocalBlock:
    index: int
    a_sub: np.ndarray
    r: np.ndarray
    penalty_diag: np.ndarray
    mu: float


def _worker_init(block: _LocalBlock) -> None:
    state: dict = {"block": block, "factor": None, "limiter": None}
    try:
        from threadpoolctl import threadpool_limits

        state["limiter"] = threadpool_limits(limits=1)
    except Exception:  # pragma: no cover - threadpoolctl is normally present
        pass
    _WORKER_STATE[block.index] = state


def _worker_solve(
    index: int, residual: np.ndarray, g_i: np.ndarray, target: np.ndarray
) -> np.ndarray:
    state = _WORKER_STATE[index]
    blk: _LocalBlock = state["block"]
    if state["factor"] is None:
        gram = blk.a_sub.T @ weight_apply(blk.r, blk.a_sub)
        if blk.mu > 0:
            gram = gram + np.diag(blk.penalty_diag)
        try:
            state["factor"] = scipy.linalg.cho_factor(gram, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise RankDeficient(f"local block {blk.index} lost column rank: {exc}") from exc
    rhs_full = residual + blk.a_sub @ g_i
    rhs = blk.a_sub.T @ weight_apply(blk.r, rhs_full)
    if blk.mu > 0:
        rhs = rhs + blk.mu * target
    return scipy.linalg.cho_solve(state["factor"], rhs, check_finite=False)


class AdditiveWorkerPool:
    """Persistent per-subdomain workers for repeated additive solves."""

    def __init__(
        self,
        prob: CLSProblem,
        deco: IndexDecomposition,
        mu: float = 1.0,
        kind: str = "process",
    ):
        self.deco = deco
        self.mu = mu
        self.a, self.b, self.r = stack(prob)
        self._pools: list[Executor] = []
        self._threaded = kind == "thread"
        for i, (a, z) in enumerate(deco.spans):
            block = _LocalBlock(
                index=i,
                a_sub=np.ascontiguousarray(self.a[:, a:z]),
                r=self.r,
                penalty_diag=_penalty_diag(deco, i, mu),
                mu=mu if deco.overlap > 0 else 0.0,
            )
            self._pools.append(self._make_pool(block))

    def _make_pool(self, block: _LocalBlock) -> Executor:
        if not self._threaded:
            try:
                pool = ProcessPoolExecutor(
                    max_workers=1,
                    mp_context=mp.get_context("fork"),
                    initializer=_worker_init,
                    initargs=(block,),
                )
                # force worker startup now so setup cost stays out of solves
                pool.submit(_noop).result()
                return pool
            except Exception as exc:  # pragma: no cover - platform dependent
                log.warning("process pool unavailable (%s); using threads", exc)
                self._threaded = True
        pool = ThreadPoolExecutor(max_workers=1, initializer=_worker_init, initargs=(block,))
        pool.submit(_noop).result()
        return pool

    def solve(
        self, tol: float = 1e-10, max_iter: int = 500, oracle: np.ndarray | None = None
    ) -> DDSolveReport:
        deco = self.deco
        p = deco.p
        locals_ = {i: np.zeros(z - a) for i, (a, z) in enumerate(deco.spans)}
        g = assemble_global(deco, [LocalSolution(i, locals_[i]) for i in range(p)])
        history: list[float] = []
        converged = False
        iterations = 0
        for sweep in range(1, max_iter + 1):
            prev = g
            residual = self.b - self.a @ g
            futures = []
            for i, (a, z) in enumerate(deco.spans):
                target = self._target(i, locals_)
                futures.append(
                    self._pools[i].submit(_worker_solve, i, residual, g[a:z], target)
                )
            locals_ = {i: f.result() for i, f in enumerate(futures)}
            g = assemble_global(deco, [LocalSolution(i, locals_[i]) for i in range(p)])
            change = float(np.max(np.abs(g - prev)))
            history.append(change)
            iterations = sweep
            if change <= tol:
                converged = True
                break
        err = None
        if oracle is not None:
            err = float(np.max(np.abs(g - np.asarray(oracle, dtype=float))))
        return DDSolveReport(
            x=g,
            iterations=iterations,
            residual_history=history,
            converged=converged,
            error_vs_oracle=err,
        )

    def _target(self, i: int, locals_) -> np.ndarray:
        a, z = self.deco.spans[i]
        t = np.zeros(z - a)
        if self.mu <= 0 or self.deco.overlap == 0:
            return t
        for j in range(self.deco.p):
            if j == i:
                continue
            lo, hi = self.deco.shared_columns(i, j)
            if lo < hi:
                aj = self.deco.spans[j][0]
                t[lo - a : hi - a] += locals_[j][lo - aj : hi - aj]
        return t

    def reset(self) -> None:
        """Drop cached factorizations so the next solve redoes the local setup."""
        for i, pool in enumerate(self._pools):
            pool.submit(_reset_factor, i).result()

    def close(self) -> None:
        for pool in self._pools:
            pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def _noop() -> None:
    return None


def _reset_factor(index: int) -> None:
    _WORKER_STATE[index]["factor"] = None
