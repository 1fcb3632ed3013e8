"""Domain decomposition of the CLS column space and the alternating
Schwarz solver.

Columns are split into contiguous half-open spans (0-based); consecutive
spans share exactly `overlap` indices. Each sweep solves the local weighted
normal equations against the frozen contribution of every column outside the
subdomain, with an optional quadratic penalty pulling shared columns toward
the neighbor's current values. Assembly takes the unique owner off the
overlaps and the average on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    CoverageGap,
    DimensionMismatch,
    EmptyOverlap,
    RangeOutOfBounds,
    RankDeficient,
)
from .estimation import CLSProblem, stack, weighted_sq_norm
from .linalg import weight_apply


@dataclass(frozen=True)
class IndexDecomposition:
    """Column spans I_1..I_p over {0..n-1} plus optional row ownership.

    spans are half-open (start, stop) in ascending order; consecutive spans
    share exactly `overlap` columns (0 means a disjoint partition).
    row_assignment, when present, partitions the stacked row indices
    {0..m0+m1-1}; it drives load accounting only, never the local solves.
    """

    n: int
    spans: tuple[tuple[int, int], ...]
    overlap: int = 0
    row_assignment: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.n < 1 or not self.spans:
            raise CoverageGap("decomposition must cover at least one column")
        prev_stop = None
        for idx, (a, z) in enumerate(self.spans):
            if not (0 <= a < z <= self.n):
                raise RangeOutOfBounds(f"span {idx} = ({a}, {z}) invalid for n = {self.n}")
            if idx == 0:
                if a != 0:
                    raise CoverageGap("first span must start at 0")
            else:
                if prev_stop - a != self.overlap:
                    raise CoverageGap(
                        f"spans {idx - 1} and {idx} share {prev_stop - a} columns, "
                        f"expected {self.overlap}"
                    )
            prev_stop = z
        if prev_stop != self.n:
            raise CoverageGap("last span must end at n")
        if self.row_assignment is not None:
            seen = sorted(i for rows in self.row_assignment for i in rows)
            if len(self.row_assignment) != len(self.spans):
                raise CoverageGap("row_assignment must have one entry per subdomain")
            if seen != list(range(len(seen))):
                raise CoverageGap("row_assignment must partition the row indices")

    @property
    def p(self) -> int:
        return len(self.spans)

    @classmethod
    def contiguous(cls, n: int, p: int, overlap: int = 0, row_assignment=None):
        """Even contiguous split of n columns into p spans with the given overlap."""
        if p < 1 or n < p:
            raise CoverageGap(f"cannot split {n} columns into {p} subdomains")
        cuts = np.linspace(0, n, p + 1).astype(int)
        spans = []
        for k in range(p):
            a = cuts[k] - (overlap if k > 0 else 0)
            if a < 0 or a >= cuts[k + 1]:
                raise CoverageGap("overlap too wide for this split")
            spans.append((int(a), int(cuts[k + 1])))
        return cls(n=n, spans=tuple(spans), overlap=overlap, row_assignment=row_assignment)

    def shared_columns(self, i: int, j: int) -> tuple[int, int]:
        """Half-open global column range shared by subdomains i and j."""
        (a1, z1), (a2, z2) = self.spans[i], self.spans[j]
        return max(a1, a2), min(z1, z2)


@dataclass
class LocalSolution:
    """One subdomain's iterate: values over its column span."""

    domain: int
    values: np.ndarray
    iteration: int = 0


@dataclass
class DDSolveReport:
    """Outcome of a Schwarz solve: assembled solution and iteration history."""

    x: np.ndarray
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    error_vs_oracle: float | None = None


def restrict_matrix(b, span: tuple[int, int]) -> np.ndarray:
    """Column slice B[:, a:z] (reduction of B to the index range)."""
    b = np.asarray(b, dtype=float)
    a, z = span
    if b.ndim != 2:
        raise DimensionMismatch("restrict_matrix expects a 2-D matrix")
    if not (0 <= a < z <= b.shape[1]):
        raise RangeOutOfBounds(f"range ({a}, {z}) outside 0..{b.shape[1]}")
    return b[:, a:z]


def extend_vector(w, span: tuple[int, int], target_len: int) -> np.ndarray:
    """Place w on positions [a, z) of a zero vector of length target_len."""
    w = np.asarray(w, dtype=float)
    a, z = span
    if w.ndim != 1 or z - a != w.size:
        raise DimensionMismatch(f"span ({a}, {z}) does not match vector of length {w.size}")
    if not (0 <= a < z <= target_len):
        raise RangeOutOfBounds(f"range ({a}, {z}) outside 0..{target_len}")
    out = np.zeros(target_len)
    out[a:z] = w
    return out


def reduced_objective(
    prob: CLSProblem, deco: IndexDecomposition, i: int, j: int, x_i, x_j
) -> float:
    """Column-reduced objective for the pair (I_i, I_j):
    ||H0|_i x_i - (y0 - H0|_j x_j)||^2_{R0} + ||H1|_i x_i - (y1 - H1|_j x_j)||^2_{R1}.
    """
    if i == j:
        raise DimensionMismatch("reduced objective needs two distinct subdomains")
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    si, sj = deco.spans[i], deco.spans[j]
    if x_i.size != si[1] - si[0] or x_j.size != sj[1] - sj[0]:
        raise DimensionMismatch("local vectors do not match their spans")
    total = 0.0
    for h, y, r in ((prob.H0, prob.y0, prob.R0), (prob.H1, prob.y1, prob.R1)):
        res = restrict_matrix(h, si) @ x_i - (y - restrict_matrix(h, sj) @ x_j)
        total += weighted_sq_norm(res, r)
    return total


def overlap_penalty(deco: IndexDecomposition, i: int, j: int, x_i, x_j) -> float:
    """Euclidean norm of the mismatch of two local solutions on their shared columns."""
    lo, hi = deco.shared_columns(i, j)
    if deco.overlap == 0 or lo >= hi:
        raise EmptyOverlap(f"subdomains {i} and {j} share no columns")
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    ai = deco.spans[i][0]
    aj = deco.spans[j][0]
    return float(np.linalg.norm(x_i[lo - ai : hi - ai] - x_j[lo - aj : hi - aj]))


def _freeze_vector(deco: IndexDecomposition, i: int, frozen: Mapping[int, np.ndarray]) -> np.ndarray:
    """Global vector of frozen column values: zero on I_i, elsewhere the
    (averaged) current values of the owning subdomains."""
    g = np.zeros(deco.n)
    cnt = np.zeros(deco.n)
    for j, (a, z) in enumerate(deco.spans):
        if j == i:
            continue
        xj = np.asarray(frozen[j], dtype=float)
        if xj.size != z - a:
            raise DimensionMismatch(f"frozen iterate {j} has wrong length")
        g[a:z] += xj
        cnt[a:z] += 1
    np.divide(g, cnt, out=g, where=cnt > 0)
    a, z = deco.spans[i]
    g[a:z] = 0.0
    return g


def _penalty_rhs(
    deco: IndexDecomposition, i: int, frozen: Mapping[int, np.ndarray], mu: float
) -> np.ndarray:
    """mu * (neighbor overlap values) accumulated on subdomain i's coordinates."""
    a, z = deco.spans[i]
    t = np.zeros(z - a)
    for j in range(deco.p):
        if j == i:
            continue
        lo, hi = deco.shared_columns(i, j)
        if lo < hi:
            aj = deco.spans[j][0]
            t[lo - a : hi - a] += mu * np.asarray(frozen[j], dtype=float)[lo - aj : hi - aj]
    return t


def _penalty_diag(deco: IndexDecomposition, i: int, mu: float) -> np.ndarray:
    a, z = deco.spans[i]
    d = np.zeros(z - a)
    for j in range(deco.p):
        if j == i:
            continue
        lo, hi = deco.shared_columns(i, j)
        if lo < hi:
            d[lo - a : hi - a] += mu
    return d


def local_solve(
    prob: CLSProblem,
    deco: IndexDecomposition,
    i: int,
    frozen: Mapping[int, np.ndarray],
    mu: float = 0.0,
) -> LocalSolution:
    """Minimize the local quadratic for subdomain i against frozen neighbors.

    Solves (A_i^T R A_i + mu S) x_i = A_i^T R (b - A f) + mu S t, where f
    freezes every column outside I_i at the neighbors' current values, S
    selects i's overlap coordinates and t holds the neighbor values there.
    For a disjoint two-domain split this is exactly the normal-equation form
    (A_1^T R A_1) x_1 = A_1^T R (b - A_2 x_2).
    """
    a_full, b, r = stack(prob)
    a, z = deco.spans[i]
    ai = a_full[:, a:z]
    rai = weight_apply(r, ai)
    gram = ai.T @ rai
    if mu > 0 and deco.overlap > 0:
        gram = gram + np.diag(_penalty_diag(deco, i, mu))
    f = _freeze_vector(deco, i, frozen)
    rhs = rai.T @ (b - a_full @ f)
    if mu > 0 and deco.overlap > 0:
        rhs = rhs + _penalty_rhs(deco, i, frozen, mu)
    try:
        c = scipy.linalg.cho_factor(gram, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficient(f"local block {i} lost column rank: {exc}") from exc
    return LocalSolution(domain=i, values=scipy.linalg.cho_solve(c, rhs, check_finite=False))


def assemble_global(deco: IndexDecomposition, locals_: Sequence[LocalSolution]) -> np.ndarray:
    """Assembled global vector: unique owner off the overlaps, average on them."""
    if len(locals_) != deco.p:
        raise CoverageGap(f"need {deco.p} local solutions, got {len(locals_)}")
    by_domain = {loc.domain: np.asarray(loc.values, dtype=float) for loc in locals_}
    if sorted(by_domain) != list(range(deco.p)):
        raise CoverageGap("local solutions must cover every subdomain exactly once")
    g = np.zeros(deco.n)
    cnt = np.zeros(deco.n)
    for j, (a, z) in enumerate(deco.spans):
        xj = by_domain[j]
        if xj.size != z - a:
            raise DimensionMismatch(f"local solution {j} has wrong length")
        g[a:z] += xj
        cnt[a:z] += 1
    if np.any(cnt == 0):
        raise CoverageGap("some column has no owner")
    return g / cnt


class _SweepSolver:
    """Prefactored local solves shared by the sequential dd_solve and the
    parallel worker pool (Gram matrices are constant across sweeps)."""

    def __init__(self, prob: CLSProblem, deco: IndexDecomposition, mu: float):
        self.deco = deco
        self.mu = mu
        self.a, self.b, self.r = stack(prob)
        self.sub = []
        self.factors = []
        for i, (a, z) in enumerate(deco.spans):
            ai = self.a[:, a:z]
            gram = ai.T @ weight_apply(self.r, ai)
            if mu > 0 and deco.overlap > 0:
                gram = gram + np.diag(_penalty_diag(deco, i, mu))
            try:
                self.factors.append(scipy.linalg.cho_factor(gram, check_finite=False))
            except scipy.linalg.LinAlgError as exc:
                raise RankDeficient(f"local block {i} lost column rank: {exc}") from exc
            self.sub.append(ai)

    def solve_local(self, i: int, residual: np.ndarray, g_i: np.ndarray, target: np.ndarray):
        """x_i from the current global residual r = b - A g and g's values on I_i."""
        rhs_full = residual + self.sub[i] @ g_i
        rhs = self.sub[i].T @ weight_apply(self.r, rhs_full)
        if self.mu > 0 and self.deco.overlap > 0:
            rhs = rhs + self.mu * target
        return scipy.linalg.cho_solve(self.factors[i], rhs, check_finite=False)

    def targets(self, i: int, frozen: Mapping[int, np.ndarray]) -> np.ndarray:
        if self.mu > 0 and self.deco.overlap > 0:
            return _penalty_rhs(self.deco, i, frozen, 1.0)
        return np.zeros(self.deco.spans[i][1] - self.deco.spans[i][0])


def dd_solve(
    prob: CLSProblem,
    deco: IndexDecomposition,
    mu: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 500,
    mode: str = "multiplicative",
    oracle: np.ndarray | None = None,
) -> DDSolveReport:
    """Alternating Schwarz solve of the decomposed CLS problem.

    multiplicative: subdomains solved in ascending id within a sweep, each
    against the newest available iterates. additive: all subdomains solve
    against the previous sweep's assembled iterate (the embarrassingly
    parallel mode the harness times). Stops when the assembled iterate moves
    by at most tol in the infinity norm, or after max_iter sweeps (reported
    as converged=False, never fatal).
    """
    if tol <= 0:
        raise DimensionMismatch("tol must be positive")
    if mode not in ("multiplicative", "additive"):
        raise DimensionMismatch(f"unknown mode {mode!r}")
    solver = _SweepSolver(prob, deco, mu)
    p = deco.p
    locals_ = {i: np.zeros(z - a) for i, (a, z) in enumerate(deco.spans)}
    g = assemble_global(deco, [LocalSolution(i, locals_[i]) for i in range(p)])
    history: list[float] = []
    converged = False
    iterations = 0
    for sweep in range(1, max_iter + 1):
        prev = g
        if mode == "multiplicative":
            for i in range(p):
                f = _freeze_vector(deco, i, locals_)
                rhs_full = solver.b - solver.a @ f
                rhs = solver.sub[i].T @ weight_apply(solver.r, rhs_full)
                if mu > 0 and deco.overlap > 0:
                    rhs = rhs + mu * solver.targets(i, locals_)
                locals_[i] = scipy.linalg.cho_solve(solver.factors[i], rhs, check_finite=False)
        else:
            residual = solver.b - solver.a @ g
            new_locals = {}
            for i, (a, z) in enumerate(deco.spans):
                target = solver.targets(i, locals_)
                new_locals[i] = solver.solve_local(i, residual, g[a:z], target)
            locals_ = new_locals
        g = assemble_global(deco, [LocalSolution(i, locals_[i]) for i in range(p)])
        change = float(np.max(np.abs(g - prev)))
        history.append(change)
        iterations = sweep
        if change <= tol:
            converged = True
            break
    err = None if oracle is None else float(np.max(np.abs(g - np.asarray(oracle, dtype=float))))
    return DDSolveReport(
        x=g,
        iterations=iterations,
        residual_history=history,
        converged=converged,
        error_vs_oracle=err,
    )
