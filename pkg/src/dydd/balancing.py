"""DyDD dynamic load balancing: empty-subdomain splitting, graph-Laplacian
diffusion scheduling, nearest-integer flow rounding, and boundary migration.

The processor graph is fixed by the scenario topology; splitting and
migration move observation ownership (and, where cleanly possible, cell
boundaries) between graph-adjacent subdomains. Scheduling solves L lam = b
with b the per-subdomain load imbalance and rounds the potential differences
to integer edge flows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllEmpty,
    DimensionMismatch,
    Disconnected,
    InsufficientLoad,
    Unsplittable,
    ZeroLoad,
)
from .geometry import Rect, Region, region_distance
from .linalg import laplacian_solve


def round_half_away(x: float) -> int:
    """Nearest integer with halves rounded away from zero (antisymmetric)."""
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


@dataclass
class ProcessorGraph:
    """Subdomain adjacency graph with per-vertex observation loads."""

    p: int
    edges: tuple[tuple[int, int], ...]
    loads: np.ndarray

    def __post_init__(self):
        self.loads = np.asarray(self.loads, dtype=np.int64)
        if self.loads.shape != (self.p,):
            raise DimensionMismatch(f"loads must have length {self.p}")
        if np.any(self.loads < 0):
            raise DimensionMismatch("loads must be nonnegative")
        seen = set()
        norm = []
        for i, j in self.edges:
            if i == j:
                raise DimensionMismatch(f"self-loop at vertex {i}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise DimensionMismatch(f"edge ({i}, {j}) outside 0..{self.p - 1}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise DimensionMismatch(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        self.edges = tuple(sorted(norm))
        if not self._connected():
            raise Disconnected("processor graph is not connected")

    def _connected(self) -> bool:
        if self.p == 1:
            return True
        adj = self.neighbor_map()
        seen = {0}
        stack = [0]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.p

    def neighbor_map(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {i: [] for i in range(self.p)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return {i: sorted(v) for i, v in adj.items()}

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    def with_loads(self, loads) -> "ProcessorGraph":
        return ProcessorGraph(p=self.p, edges=self.edges, loads=np.asarray(loads))


@dataclass
class BalanceSchedule:
    """Laplacian potentials and rounded integer edge flows.

    flows maps each undirected edge (i, j) with i < j to delta_{i,j}; the
    reverse direction is the negation (antisymmetry is exact).
    """

    lam: np.ndarray
    flows: dict[tuple[int, int], int]

    def delta(self, i: int, j: int) -> int:
        if (min(i, j), max(i, j)) not in self.flows:
            raise DimensionMismatch(f"({i}, {j}) is not an edge")
        d = self.flows[(min(i, j), max(i, j))]
        return d if i < j else -d

    @property
    def all_zero(self) -> bool:
        return all(v == 0 for v in self.flows.values())


@dataclass
class BalanceTrace:
    """Loads before balancing, after splitting, and after migration."""

    l_in: np.ndarray
    l_r: np.ndarray
    l_fin: np.ndarray
    rounds: int
    E: float
    balanced: bool
    t_split: float = 0.0
    t_total: float = 0.0


class SpatialDecomposition:
    """2D domain tiled into per-subdomain regions with owned observations.

    Ownership is explicit per observation and is the source of truth for
    loads; the stored geometry is exact after splits and is additionally
    updated by migration whenever two subdomains meet along a single full
    shared edge (the strip layouts of the pair/chain scenarios).
    """

    def __init__(self, domain, regions, points, owner, graph: ProcessorGraph):
        self.domain = domain
        self.regions: list[Region] = list(regions)
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.owner = np.asarray(owner, dtype=np.int64).copy()
        self.graph = graph
        if len(self.regions) != graph.p:
            raise DimensionMismatch("one region per graph vertex required")
        if self.owner.shape != (self.points.shape[0],):
            raise DimensionMismatch("owner must assign every observation")
        if self.points.size and (
            np.any(self.owner < 0) or np.any(self.owner >= graph.p)
        ):
            raise DimensionMismatch("owner ids outside 0..p-1")
        area = sum(r.area for r in self.regions)
        if not np.isclose(area, self.domain.area, rtol=1e-9):
            raise DimensionMismatch("regions do not tile the domain")
        self._sync_loads()

    @property
    def p(self) -> int:
        return self.graph.p

    def loads(self) -> np.ndarray:
        return np.bincount(self.owner, minlength=self.p).astype(np.int64)

    def _sync_loads(self) -> None:
        self.graph = self.graph.with_loads(self.loads())


def build_laplacian(g: ProcessorGraph) -> np.ndarray:
    """L_ii = deg(i), L_ij = -1 on edges, 0 elsewhere."""
    lap = np.zeros((g.p, g.p))
    for i, j in g.edges:
        lap[i, j] -= 1.0
        lap[j, i] -= 1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    return lap


def compute_imbalance(g: ProcessorGraph) -> np.ndarray:
    """b_i = l(i) - mean(l), computed as (p*l_i - total)/p so the integer
    numerators sum to zero exactly."""
    total = int(g.loads.sum())
    return (g.p * g.loads.astype(float) - total) / g.p


def schedule(g: ProcessorGraph) -> BalanceSchedule:
    """Solve L lam = b on the processor graph and round edge potential
    differences to integer flows (half away from zero)."""
    lam = laplacian_solve(build_laplacian(g), compute_imbalance(g))
    flows = {(i, j): round_half_away(lam[i] - lam[j]) for i, j in g.edges}
    return BalanceSchedule(lam=lam, flows=flows)


def _split_once(deco: SpatialDecomposition, empty: int, donor: int) -> None:
    """Bisect the donor's region and hand the piece adjacent to `empty` over.

    The cut runs perpendicular to the shared boundary, at the midpoint of the
    donor's occupied span along that axis (a geometric-midpoint cut can fall
    outside the occupied zone and transfer nothing).
    """
    donor_region = deco.regions[donor]
    empty_region = deco.regions[empty]
    contact = donor_region.contact_axis(empty_region)
    if contact is None:
        raise Unsplittable(f"subdomains {donor} and {empty} share no boundary")
    axis, direction = contact
    mask = deco.owner == donor
    coords = deco.points[mask, axis]
    lo, hi = coords.min(), coords.max()
    if hi - lo <= 1e-12:
        # all donor observations share this coordinate; try the other axis
        other = 1 - axis
        oc = deco.points[mask, other]
        if oc.max() - oc.min() <= 1e-12:
            raise Unsplittable(f"subdomain {donor} observations are not separable")
        axis, coords, lo, hi = other, oc, oc.min(), oc.max()
        direction = 0  # resolved below by distance
    cut = 0.5 * (lo + hi)
    low_region, high_region = donor_region.split(axis, cut)
    if low_region is None or high_region is None:
        raise Unsplittable(f"cut at {cut} does not divide subdomain {donor}")
    if direction > 0:
        near, far = high_region, low_region
    elif direction < 0:
        near, far = low_region, high_region
    else:
        near, far = (
            (low_region, high_region)
            if region_distance(empty_region, low_region)
            <= region_distance(empty_region, high_region)
            else (high_region, low_region)
        )
    point_high = deco.points[:, axis] >= cut
    goes_near = point_high if near is high_region else ~point_high
    moved = mask & goes_near
    if not moved.any() or moved.sum() == mask.sum():
        raise Unsplittable(
            f"cut at {cut} leaves one side of subdomain {donor} without observations"
        )
    deco.owner[moved] = empty
    deco.regions[empty] = empty_region.merged(near).simplified()
    deco.regions[donor] = far.simplified()
    deco._sync_loads()


def check_and_split(deco: SpatialDecomposition) -> SpatialDecomposition:
    """DD step: while some subdomain is empty, bisect its max-load graph
    neighbor and hand the adjacent half over (lowest eligible id first).

    Mutates and returns deco. Raises AllEmpty when no observation exists,
    Unsplittable when an empty subdomain can never be fed (donor with < 2
    observations or no loaded neighbor reachable).
    """
    if deco.loads().sum() == 0:
        raise AllEmpty("no observations anywhere")
    adj = deco.graph.neighbor_map()
    while True:
        loads = deco.loads()
        empties = [i for i in range(deco.p) if loads[i] == 0]
        if not empties:
            return deco
        candidates = [e for e in empties if any(loads[j] > 0 for j in adj[e])]
        if not candidates:
            raise Unsplittable(f"empty subdomains {empties} have no loaded neighbors")
        e = candidates[0]
        donor = max(adj[e], key=lambda j: (loads[j], -j))
        if loads[donor] < 2:
            raise Unsplittable(
                f"max-load neighbor {donor} of empty subdomain {e} holds "
                f"{loads[donor]} observation(s)"
            )
        _split_once(deco, e, donor)


def _transfer(deco: SpatialDecomposition, src: int, dst: int, count: int) -> None:
    """Move `count` observations of src nearest to dst's region; shift the
    stored boundary when the two regions meet along one full shared edge."""
    idx = np.flatnonzero(deco.owner == src)
    if idx.size < count:
        raise InsufficientLoad(
            f"subdomain {src} holds {idx.size} observations but must send {count}"
        )
    dist = deco.regions[dst].distances(deco.points[idx])
    order = np.lexsort((idx, dist))
    chosen = idx[order[:count]]
    deco.owner[chosen] = dst
    _maybe_shift_boundary(deco, src, dst, chosen, idx[order[count:]])
    deco._sync_loads()


def _maybe_shift_boundary(deco, src, dst, moved_idx, kept_idx) -> None:
    rs, rd = deco.regions[src], deco.regions[dst]
    if len(rs.rects) != 1 or len(rd.rects) != 1:
        return
    a, b = rs.rects[0], rd.rects[0]
    shifted = None
    if np.isclose(a.x1, b.x0) and np.isclose(a.y0, b.y0) and np.isclose(a.y1, b.y1):
        axis, lo_is_src = 0, True
    elif np.isclose(b.x1, a.x0) and np.isclose(a.y0, b.y0) and np.isclose(a.y1, b.y1):
        axis, lo_is_src = 0, False
    elif np.isclose(a.y1, b.y0) and np.isclose(a.x0, b.x0) and np.isclose(a.x1, b.x1):
        axis, lo_is_src = 1, True
    elif np.isclose(b.y1, a.y0) and np.isclose(a.x0, b.x0) and np.isclose(a.x1, b.x1):
        axis, lo_is_src = 1, False
    else:
        return
    moved = deco.points[moved_idx, axis]
    kept = deco.points[kept_idx, axis] if kept_idx.size else np.array([])
    if lo_is_src:
        inner = kept.max() if kept.size else (a.x0 if axis == 0 else a.y0)
        if moved.size and moved.min() > inner:
            shifted = 0.5 * (inner + moved.min())
    else:
        inner = kept.min() if kept.size else (a.x1 if axis == 0 else a.y1)
        if moved.size and moved.max() < inner:
            shifted = 0.5 * (inner + moved.max())
    if shifted is None:
        return
    if axis == 0:
        new_a = Rect(a.x0, a.y0, shifted, a.y1) if lo_is_src else Rect(shifted, a.y0, a.x1, a.y1)
        new_b = Rect(shifted, b.y0, b.x1, b.y1) if lo_is_src else Rect(b.x0, b.y0, shifted, b.y1)
    else:
        new_a = Rect(a.x0, a.y0, a.x1, shifted) if lo_is_src else Rect(a.x0, shifted, a.x1, a.y1)
        new_b = Rect(b.x0, shifted, b.x1, b.y1) if lo_is_src else Rect(b.x0, b.y0, b.x1, shifted)
    deco.regions[src] = Region(new_a)
    deco.regions[dst] = Region(new_b)


def migrate(
    deco: SpatialDecomposition, sched: BalanceSchedule, partial: bool = False
) -> SpatialDecomposition:
    """Carry out the scheduled flows by transferring, for each directed flow
    delta_{i,j} > 0, the delta observations of i nearest to j.

    Flows are processed in availability passes so a subdomain may receive
    before it sends. With partial=False (the default contract) any flow that
    can never be satisfied raises InsufficientLoad; with partial=True the
    sendable part moves and the remainder is left to the next scheduling
    round. Mutates and returns deco.
    """
    pending = [
        (i, j, d) if d > 0 else (j, i, -d)
        for (i, j), d in sorted(sched.flows.items())
        if d != 0
    ]
    while pending:
        progressed = False
        remaining = []
        for src, dst, d in pending:
            if int(deco.loads()[src]) >= d:
                _transfer(deco, src, dst, d)
                progressed = True
            else:
                remaining.append((src, dst, d))
        pending = remaining
        if pending and not progressed:
            if not partial:
                src, dst, d = pending[0]
                raise InsufficientLoad(
                    f"subdomain {src} must send {d} to {dst} but holds "
                    f"{int(deco.loads()[src])}"
                )
            # clamp what is left to current holdings and defer the rest to
            # the next scheduling round
            for src, dst, d in pending:
                avail = int(deco.loads()[src])
                if avail > 0:
                    _transfer(deco, src, dst, min(d, avail))
            pending = []
    return deco


def _smooth(deco: SpatialDecomposition, max_moves: int = 100000) -> int:
    """Move single observations along edges whose load difference is >= 2
    until no such edge remains; the last mile that integer flow rounding
    cannot express. Returns the number of unit moves."""
    moves = 0
    improved = True
    while improved and moves < max_moves:
        improved = False
        loads = deco.loads()
        for i, j in deco.graph.edges:
            if loads[i] - loads[j] >= 2:
                _transfer(deco, i, j, 1)
                loads = deco.loads()
                moves += 1
                improved = True
            elif loads[j] - loads[i] >= 2:
                _transfer(deco, j, i, 1)
                loads = deco.loads()
                moves += 1
                improved = True
    return moves


def balance_metric(loads) -> float:
    """E = min(loads) / max(loads); 1 means perfectly balanced."""
    loads = np.asarray(loads)
    if loads.size == 0 or np.any(loads <= 0):
        raise ZeroLoad("balance metric requires all loads > 0")
    return float(loads.min() / loads.max())


def balance(deco: SpatialDecomposition, max_rounds: int = 10) -> BalanceTrace:
    """Full DyDD pass: split empty subdomains once, then alternate
    scheduling and migration until the flows vanish, the squared imbalance
    stops improving, or max_rounds is reached; finish with unit smoothing.

    Returns a BalanceTrace; an unbalanced outcome sets balanced=False rather
    than raising. rounds counts scheduling rounds that migrated something.
    """
    t_start = time.perf_counter()
    l_in = deco.loads()
    t_split = 0.0
    if np.any(l_in == 0):
        t0 = time.perf_counter()
        check_and_split(deco)
        t_split = time.perf_counter() - t0
    l_r = deco.loads()
    rounds = 0
    prev_ss = float(np.sum(compute_imbalance(deco.graph) ** 2))
    for _ in range(max_rounds):
        sched = schedule(deco.graph)
        if sched.all_zero:
            break
        saved_owner = deco.owner.copy()
        saved_regions = list(deco.regions)
        migrate(deco, sched, partial=True)
        ss = float(np.sum(compute_imbalance(deco.graph) ** 2))
        if ss >= prev_ss:
            # rounding noise no longer improves anything; undo and hand over
            # to unit smoothing
            deco.owner = saved_owner
            deco.regions = saved_regions
            deco._sync_loads()
            break
        rounds += 1
        prev_ss = ss
    _smooth(deco)
    l_fin = deco.loads()
    edge_ok = all(abs(int(l_fin[i]) - int(l_fin[j])) <= 1 for i, j in deco.graph.edges)
    e = balance_metric(l_fin) if np.all(l_fin > 0) else 0.0
    return BalanceTrace(
        l_in=l_in,
        l_r=l_r,
        l_fin=l_fin,
        rounds=rounds,
        E=e,
        balanced=bool(edge_ok and np.all(l_fin > 0)),
        t_split=t_split,
        t_total=time.perf_counter() - t_start,
    )
