"""Dense linear-algebra backbone: SPD solves, weighted normal equations,
and rank-deficient graph-Laplacian solves.

Weight matrices may be passed either as full (m, m) arrays or as 1-D arrays
holding the diagonal; the diagonal form is what the experiment scenarios use.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, Disconnected, InconsistentRHS, NotSPD, RankDeficient

SYMMETRY_RTOL = 1e-12
RHS_SUM_RTOL = 1e-9
RESIDUAL_RTOL = 1e-9


def _as_vector(b, name: str = "b") -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size == 0:
        raise DimensionMismatch(f"{name} must be a nonempty 1-D vector, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return b


def _as_matrix(a, name: str = "A") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a nonempty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return a


def weight_apply(r, m: np.ndarray) -> np.ndarray:
    """R @ m for a weight R given as a full matrix or a 1-D diagonal."""
    r = np.asarray(r, dtype=float)
    if r.ndim == 1:
        return r[:, None] * m if m.ndim == 2 else r * m
    return r @ m


def weight_dim(r) -> int:
    r = np.asarray(r)
    return r.shape[0]


def spd_solve(a, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A via Cholesky.

    Raises NotSPD if A is not symmetric (relative tolerance 1e-12) or a
    factorization pivot fails, DimensionMismatch on shape errors.
    """
    a = _as_matrix(a)
    b = _as_vector(b)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    if a.shape[0] != b.size:
        raise DimensionMismatch(f"A is {a.shape} but b has length {b.size}")
    scale = np.abs(a).max()
    if scale > 0 and np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise NotSPD("matrix is not symmetric")
    try:
        c, low = scipy.linalg.cho_factor(a, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotSPD(f"Cholesky factorization failed: {exc}") from exc
    return scipy.linalg.cho_solve((c, low), b, check_finite=False)


def weighted_normal_solve(a, r, b) -> np.ndarray:
    """Solve the weighted normal equations (A^T R A) x = A^T R b.

    A is m-by-n with m >= n and full column rank; R is an SPD weight
    (full matrix or 1-D diagonal). Returns the minimizer of ||Ax - b||^2_R.
    Raises RankDeficient if A^T R A cannot be factorized.
    """
    a = _as_matrix(a)
    b = _as_vector(b)
    m, n = a.shape
    if m < n:
        raise DimensionMismatch(f"A must have m >= n, got {a.shape}")
    if b.size != m or weight_dim(r) != m:
        raise DimensionMismatch("A, R and b dimensions are inconsistent")
    ra = weight_apply(r, a)
    gram = a.T @ ra
    rhs = ra.T @ b  # (RA)^T b = A^T R b for symmetric R
    try:
        return spd_solve(gram, rhs)
    except NotSPD as exc:
        raise RankDeficient(f"normal matrix not positive definite: {exc}") from exc


def laplacian_solve(lap, b) -> np.ndarray:
    """Solve L lam = b for a connected-graph Laplacian, gauge-fixed to mean(lam) = 0.

    L is singular with nullspace span{1}; the system is solvable iff sum(b) = 0.
    The solve goes through the SPD rank-one augmentation L + (1/p) 11^T, which
    agrees with the pseudo-inverse solution on the mean-zero subspace.

    Raises InconsistentRHS when sum(b) exceeds 1e-9 * ||b||, Disconnected when
    the graph is not connected (rank < p - 1).
    """
    lap = _as_matrix(lap, "L")
    b = _as_vector(b)
    p = lap.shape[0]
    if lap.shape[0] != lap.shape[1] or b.size != p:
        raise DimensionMismatch(f"L is {lap.shape} but b has length {b.size}")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(p)
    if abs(b.sum()) > RHS_SUM_RTOL * bnorm:
        raise InconsistentRHS(
            f"sum(b) = {b.sum():.3e} violates flow conservation (||b|| = {bnorm:.3e})"
        )
    try:
        lam = spd_solve(lap + np.ones((p, p)) / p, b)
    except NotSPD as exc:
        raise Disconnected(f"Laplacian rank < p-1: {exc}") from exc
    lam = lam - lam.mean()
    if np.linalg.norm(lap @ lam - b) > RESIDUAL_RTOL * bnorm:
        raise Disconnected("Laplacian solve residual too large; graph not connected")
    return lam
