"""Constrained-least-squares state estimation.

The model couples two overdetermined systems: a state block H0 x = y0
(m0 > n rows, full column rank) and an observation block H1 x = y1, weighted
by SPD matrices R0 and R1. The minimizer of

    J(x) = ||H0 x - y0||^2_{R0} + ||H1 x - y1||^2_{R1}

is the normal-equation solution, and a sequential Kalman filter with identity
model and zero model-error covariance reproduces it exactly; both routes are
implemented and cross-checked in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, RankDeficient, SingularInnovation
from .linalg import weight_apply, weight_dim, weighted_normal_solve


def weighted_sq_norm(v: np.ndarray, w) -> float:
    """||v||^2_W = v^T W v for W a full matrix or 1-D diagonal."""
    v = np.asarray(v, dtype=float)
    return float(v @ weight_apply(w, v))


@dataclass
class CLSProblem:
    """Stacked state/observation least-squares problem.

    H0: (m0, n) state block, m0 > n, full column rank.
    H1: (m1, n) observation block, m1 >= 1.
    R0, R1: SPD weights, full matrices or 1-D diagonals.
    """

    H0: np.ndarray
    y0: np.ndarray
    H1: np.ndarray
    y1: np.ndarray
    R0: np.ndarray
    R1: np.ndarray

    def __post_init__(self):
        self.H0 = np.asarray(self.H0, dtype=float)
        self.H1 = np.asarray(self.H1, dtype=float)
        self.y0 = np.asarray(self.y0, dtype=float)
        self.y1 = np.asarray(self.y1, dtype=float)
        self.R0 = np.asarray(self.R0, dtype=float)
        self.R1 = np.asarray(self.R1, dtype=float)
        if self.H0.ndim != 2 or self.H1.ndim != 2:
            raise DimensionMismatch("H0 and H1 must be 2-D")
        m0, n = self.H0.shape
        m1, n1 = self.H1.shape
        if n1 != n:
            raise DimensionMismatch(f"H0 has {n} columns but H1 has {n1}")
        if not (m0 > n >= 1):
            raise DimensionMismatch(f"state block must be overdetermined: m0={m0}, n={n}")
        if m1 < 1:
            raise DimensionMismatch("observation block must have at least one row")
        if self.y0.shape != (m0,) or self.y1.shape != (m1,):
            raise DimensionMismatch("y0/y1 lengths do not match H0/H1")
        if weight_dim(self.R0) != m0 or weight_dim(self.R1) != m1:
            raise DimensionMismatch("R0/R1 sizes do not match H0/H1")
        for arr in (self.H0, self.H1, self.y0, self.y1, self.R0, self.R1):
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch("problem data contains non-finite entries")

    @property
    def n(self) -> int:
        return self.H0.shape[1]

    @property
    def m0(self) -> int:
        return self.H0.shape[0]

    @property
    def m1(self) -> int:
        return self.H1.shape[0]


def stack(prob: CLSProblem):
    """Stacked form (A, b, R): A = [H0; H1], b = [y0; y1], R = diag(R0, R1).

    R is returned in the representation of the inputs: a 1-D concatenated
    diagonal when both weights are diagonal, a dense block-diagonal otherwise.
    """
    a = np.vstack([prob.H0, prob.H1])
    b = np.concatenate([prob.y0, prob.y1])
    if prob.R0.ndim == 1 and prob.R1.ndim == 1:
        r = np.concatenate([prob.R0, prob.R1])
    else:
        r0 = np.diag(prob.R0) if prob.R0.ndim == 1 else prob.R0
        r1 = np.diag(prob.R1) if prob.R1.ndim == 1 else prob.R1
        r = scipy.linalg.block_diag(r0, r1)
    return a, b, r


def cls_objective(prob: CLSProblem, x) -> float:
    """J(x) = ||H0 x - y0||^2_{R0} + ||H1 x - y1||^2_{R1}."""
    x = np.asarray(x, dtype=float)
    if x.shape != (prob.n,):
        raise DimensionMismatch(f"x must have length {prob.n}, got {x.shape}")
    return weighted_sq_norm(prob.H0 @ x - prob.y0, prob.R0) + weighted_sq_norm(
        prob.H1 @ x - prob.y1, prob.R1
    )


def cls_solve(prob: CLSProblem) -> np.ndarray:
    """Normal-equation minimizer of the stacked weighted system."""
    a, b, r = stack(prob)
    return weighted_normal_solve(a, r, b)


@dataclass
class KFState:
    """Filter state: estimate x, error covariance P, step counter k."""

    x: np.ndarray
    P: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        n = self.x.size
        if self.P.shape != (n, n):
            raise DimensionMismatch(f"P must be ({n}, {n}), got {self.P.shape}")


def kf_predict(state: KFState, m, q) -> KFState:
    """Prediction step: x <- M x, P <- M P M^T + Q."""
    m = np.asarray(m, dtype=float)
    q = np.asarray(q, dtype=float)
    n = state.x.size
    if m.shape != (n, n) or q.shape != (n, n):
        raise DimensionMismatch("M and Q must be n-by-n")
    x = m @ state.x
    p = m @ state.P @ m.T + q
    return KFState(x=x, P=0.5 * (p + p.T), k=state.k + 1)


def kf_correct(state: KFState, h, r, y) -> KFState:
    """Correction step: gain K = P H^T (H P H^T + R)^{-1}, then
    x <- x + K (y - H x) and P <- (I - K H) P."""
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    n = state.x.size
    if h.ndim != 2 or h.shape[1] != n:
        raise DimensionMismatch(f"H must have {n} columns")
    mrows = h.shape[0]
    if y.shape != (mrows,) or weight_dim(r) != mrows:
        raise DimensionMismatch("H, R and y dimensions are inconsistent")
    pht = state.P @ h.T
    s = h @ pht
    r = np.asarray(r, dtype=float)
    if r.ndim == 1:
        s[np.diag_indices_from(s)] += r
    else:
        s = s + r
    try:
        c = scipy.linalg.cho_factor(s, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise SingularInnovation(f"innovation covariance singular: {exc}") from exc
    k = scipy.linalg.cho_solve(c, pht.T, check_finite=False).T
    x = state.x + k @ (y - h @ state.x)
    p = state.P - k @ pht.T
    return KFState(x=x, P=0.5 * (p + p.T), k=state.k)


def kf_assimilate_cls(prob: CLSProblem, block_size: int = 1) -> np.ndarray:
    """Solve the CLS problem by sequential Kalman assimilation.

    The filter is initialized from the state block in information form
    (x = argmin ||H0 x - y0||^2_{R0}, P = (H0^T R0 H0)^{-1}), then the
    observation rows are assimilated in blocks with identity model and zero
    model-error covariance. The result matches cls_solve; the observation
    order does not matter for this linear-Gaussian problem.
    """
    if not (1 <= block_size <= prob.m1):
        raise DimensionMismatch(f"block_size must be in [1, {prob.m1}]")
    ra = weight_apply(prob.R0, prob.H0)
    gram0 = prob.H0.T @ ra
    try:
        c = scipy.linalg.cho_factor(gram0, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficient(f"state block rank deficient: {exc}") from exc
    x = scipy.linalg.cho_solve(c, ra.T @ prob.y0, check_finite=False)
    p = scipy.linalg.cho_solve(c, np.eye(prob.n), check_finite=False)
    state = KFState(x=x, P=0.5 * (p + p.T), k=0)
    r1 = prob.R1
    for a in range(0, prob.m1, block_size):
        z = min(a + block_size, prob.m1)
        rblk = r1[a:z] if r1.ndim == 1 else r1[a:z, a:z]
        state = kf_correct(state, prob.H1[a:z], rblk, prob.y1[a:z])
    return state.x


def varkf_objective(x_next, x_hat, m, qw, h, r, y) -> float:
    """Two-term variational filter objective
    ||x_next - M x_hat||^2_{Qw} + ||y - H x_next||^2_R with explicit weights."""
    x_next = np.asarray(x_next, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    m = np.asarray(m, dtype=float)
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.shape != (x_next.size, x_hat.size):
        raise DimensionMismatch("M shape inconsistent with states")
    if h.ndim != 2 or h.shape[1] != x_next.size or y.shape != (h.shape[0],):
        raise DimensionMismatch("H/y shapes inconsistent with x_next")
    if weight_dim(qw) != x_next.size or weight_dim(r) != y.size:
        raise DimensionMismatch("weight sizes inconsistent")
    return weighted_sq_norm(x_next - m @ x_hat, qw) + weighted_sq_norm(y - h @ x_next, r)
