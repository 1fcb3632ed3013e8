"""Exception types shared across the package."""

from __future__ import annotations


class DyddError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DyddError):
    """Operands have incompatible shapes."""


class NotSPD(DyddError):
    """Matrix expected to be symmetric positive definite is not."""


class RankDeficient(DyddError):
    """Normal-equation matrix could not be factorized (column-rank loss)."""


class InconsistentRHS(DyddError):
    """Right-hand side of a singular system violates the compatibility condition."""


class Disconnected(DyddError):
    """Graph Laplacian has rank < p-1 (graph not connected)."""


class SingularInnovation(DyddError):
    """Innovation covariance H P H^T + R is singular."""


class RangeOutOfBounds(DyddError):
    """Index range points outside the matrix/vector it restricts."""


class EmptyOverlap(DyddError):
    """Overlap operation requested on subdomains that share no columns."""


class CoverageGap(DyddError):
    """Some global index is covered by no subdomain."""


class Unsplittable(DyddError):
    """Empty-subdomain splitting cannot make progress."""


class AllEmpty(DyddError):
    """Every subdomain is empty; there is nothing to balance."""


class InsufficientLoad(DyddError):
    """A subdomain is scheduled to send more observations than it holds."""


class ZeroLoad(DyddError):
    """Balance metric requested with a zero per-subdomain load."""


class InfeasibleDistribution(DyddError):
    """Scenario observation distribution cannot be realized."""


class ScenarioError(DyddError):
    """Scenario file or dictionary is malformed."""


class IoFailure(DyddError):
    """Report or scenario I/O failed."""
