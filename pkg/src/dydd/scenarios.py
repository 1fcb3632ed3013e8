"""Scenario definitions and deterministic problem generation.

A scenario fixes the state dimension, the observation count and placement,
the subdomain topology, and solver/balancer parameters. Generation is fully
determined by the seed: the same scenario dictionary produces bit-identical
problems and decompositions.

Scenario JSON schema (snake_case, unknown keys rejected)::

    {
      "n": 2048, "m": 1500, "p": 2,
      "topology": "pair" | "chain" | "grid" | "star",
      "distribution": {"kind": "uniform"}
                    | {"kind": "weighted", "counts": [..]}
                    | {"kind": "empty-set", "empty_ids": [..], "counts": [..],
                       "clusters": [{"cell": i, "count": c,
                                     "box": [x0, y0, x1, y1]}, ...]},
      "seed": 0, "s": 0, "mu": 1.0,
      "tol": 1e-10, "max_iter": 500, "max_rounds": 10
    }

The optional cluster list pins observation placement inside named cells; the
shipped Example 1/2 reconstruction scenarios use it so that occupied-span
bisection reproduces the intended post-split loads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .balancing import ProcessorGraph, SpatialDecomposition
from .errors import InfeasibleDistribution, ScenarioError
from .estimation import CLSProblem
from .geometry import Rect, Region

TOPOLOGIES = ("pair", "chain", "grid", "star")
DIST_KINDS = ("uniform", "weighted", "empty-set")

_REQUIRED = ("n", "m", "p", "topology", "distribution")
_DEFAULTS = {"seed": 0, "s": 0, "mu": 1.0, "tol": 1e-10, "max_iter": 500, "max_rounds": 10}


@dataclass(frozen=True)
class Cluster:
    cell: int
    count: int
    box: tuple[float, float, float, float]


@dataclass(frozen=True)
class Distribution:
    kind: str
    counts: tuple[int, ...] | None = None
    empty_ids: tuple[int, ...] = ()
    clusters: tuple[Cluster, ...] = ()


@dataclass(frozen=True)
class Scenario:
    n: int
    m: int
    p: int
    topology: str
    distribution: Distribution
    seed: int = 0
    s: int = 0
    mu: float = 1.0
    tol: float = 1e-10
    max_iter: int = 500
    max_rounds: int = 10

    def __post_init__(self):
        if self.p < 1 or self.n < 1 or self.m < 1:
            raise ScenarioError("n, m and p must be positive")
        if self.topology not in TOPOLOGIES:
            raise ScenarioError(f"unknown topology {self.topology!r}")
        if self.topology == "pair" and self.p != 2:
            raise ScenarioError("pair topology requires p = 2")
        if self.topology in ("chain", "star", "grid") and self.p < 2:
            raise ScenarioError(f"{self.topology} topology requires p >= 2")
        d = self.distribution
        if d.kind not in DIST_KINDS:
            raise ScenarioError(f"unknown distribution kind {d.kind!r}")
        if d.kind == "uniform":
            if self.m < self.p:
                raise ScenarioError("uniform distribution requires m >= p")
        else:
            if d.counts is None or len(d.counts) != self.p:
                raise ScenarioError("counts must list one entry per subdomain")
            if any(c < 0 for c in d.counts) or sum(d.counts) != self.m:
                raise InfeasibleDistribution(
                    f"counts must be nonnegative and sum to m = {self.m}"
                )
        if d.kind == "weighted" and any(c == 0 for c in d.counts or ()):
            raise InfeasibleDistribution(
                "weighted distribution with zero counts: use kind 'empty-set'"
            )
        if d.kind == "empty-set":
            empt = set(d.empty_ids)
            if not empt:
                raise ScenarioError("empty-set distribution needs empty_ids")
            if any(not (0 <= e < self.p) for e in empt):
                raise ScenarioError("empty_ids outside 0..p-1")
            for i, c in enumerate(d.counts):
                if (i in empt) != (c == 0):
                    raise InfeasibleDistribution(
                        f"count of subdomain {i} inconsistent with empty_ids"
                    )
            per_cell: dict[int, int] = {}
            for cl in d.clusters:
                per_cell[cl.cell] = per_cell.get(cl.cell, 0) + cl.count
            for cell, total in per_cell.items():
                if cell in empt or not (0 <= cell < self.p):
                    raise InfeasibleDistribution(f"cluster names invalid cell {cell}")
                if total != d.counts[cell]:
                    raise InfeasibleDistribution(
                        f"clusters of cell {cell} sum to {total}, counts say "
                        f"{d.counts[cell]}"
                    )
        if self.s < 0 or self.mu < 0 or self.tol <= 0:
            raise ScenarioError("s must be >= 0, mu >= 0, tol > 0")
        if self.max_iter < 1 or self.max_rounds < 1:
            raise ScenarioError("max_iter and max_rounds must be >= 1")


def _parse_distribution(obj) -> Distribution:
    if not isinstance(obj, dict):
        raise ScenarioError("distribution must be an object")
    allowed = {"kind", "counts", "empty_ids", "clusters"}
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"unknown distribution keys: {sorted(unknown)}")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise ScenarioError("distribution.kind must be a string")
    counts = obj.get("counts")
    if counts is not None:
        if not isinstance(counts, list) or not all(isinstance(c, int) for c in counts):
            raise ScenarioError("distribution.counts must be a list of integers")
        counts = tuple(counts)
    empty_ids = obj.get("empty_ids", [])
    if not isinstance(empty_ids, list) or not all(isinstance(e, int) for e in empty_ids):
        raise ScenarioError("distribution.empty_ids must be a list of integers")
    clusters = []
    for c in obj.get("clusters", []):
        if not isinstance(c, dict) or set(c) != {"cell", "count", "box"}:
            raise ScenarioError("each cluster needs exactly cell, count, box")
        box = c["box"]
        if not (isinstance(box, list) and len(box) == 4):
            raise ScenarioError("cluster box must be [x0, y0, x1, y1]")
        clusters.append(Cluster(cell=int(c["cell"]), count=int(c["count"]), box=tuple(map(float, box))))
    return Distribution(
        kind=kind, counts=counts, empty_ids=tuple(empty_ids), clusters=tuple(clusters)
    )


def scenario_from_dict(obj: dict) -> Scenario:
    """Validate a scenario dictionary; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    allowed = set(_REQUIRED) | set(_DEFAULTS)
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in obj]
    if missing:
        raise ScenarioError(f"missing scenario keys: {missing}")
    kwargs = {k: obj[k] for k in obj if k != "distribution"}
    for key, default in _DEFAULTS.items():
        kwargs.setdefault(key, default)
    try:
        return Scenario(distribution=_parse_distribution(obj["distribution"]), **kwargs)
    except TypeError as exc:
        raise ScenarioError(f"bad scenario field types: {exc}") from exc


def scenario_to_dict(sc: Scenario) -> dict:
    d: dict = {"kind": sc.distribution.kind}
    if sc.distribution.counts is not None:
        d["counts"] = list(sc.distribution.counts)
    if sc.distribution.empty_ids:
        d["empty_ids"] = list(sc.distribution.empty_ids)
    if sc.distribution.clusters:
        d["clusters"] = [
            {"cell": c.cell, "count": c.count, "box": list(c.box)}
            for c in sc.distribution.clusters
        ]
    return {
        "n": sc.n,
        "m": sc.m,
        "p": sc.p,
        "topology": sc.topology,
        "distribution": d,
        "seed": sc.seed,
        "s": sc.s,
        "mu": sc.mu,
        "tol": sc.tol,
        "max_iter": sc.max_iter,
        "max_rounds": sc.max_rounds,
    }


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(obj)


def build_topology(topology: str, p: int):
    """(domain, cells, edges) for the named topology; cells are unit-square
    tiles arranged so every graph edge is also a geometric contact."""
    if topology in ("pair", "chain") or (topology == "star" and p == 2):
        domain = Rect(0.0, 0.0, float(p), 1.0)
        cells = [Rect(float(i), 0.0, float(i + 1), 1.0) for i in range(p)]
        edges = [(i, i + 1) for i in range(p - 1)]
        return domain, cells, edges
    if topology == "grid":
        gx = int(np.ceil(np.sqrt(p)))
        while p % gx:
            gx += 1
        gy = p // gx
        domain = Rect(0.0, 0.0, float(gx), float(gy))
        cells = [
            Rect(float(i), float(j), float(i + 1), float(j + 1))
            for j in range(gy)
            for i in range(gx)
        ]
        edges = []
        for j in range(gy):
            for i in range(gx):
                k = j * gx + i
                if i + 1 < gx:
                    edges.append((k, k + 1))
                if j + 1 < gy:
                    edges.append((k, k + gx))
        return domain, cells, edges
    if topology == "star":
        # center column on the left, leaf tiles stacked on the right
        leaves = p - 1
        domain = Rect(0.0, 0.0, 2.0, float(leaves))
        cells = [Rect(0.0, 0.0, 1.0, float(leaves))]
        cells += [Rect(1.0, float(i), 2.0, float(i + 1)) for i in range(leaves)]
        edges = [(0, i) for i in range(1, p)]
        return domain, cells, edges
    raise ScenarioError(f"unknown topology {topology!r}")


def _mesh_shape(n: int, domain: Rect) -> tuple[int, int]:
    """Factor n into (gx, gy) with gx/gy as close as possible to the domain
    aspect ratio (state entries live on a gx-by-gy grid over the domain)."""
    aspect = domain.width / domain.height
    best = (n, 1)
    best_score = abs(np.log(n / aspect))
    for gx in range(1, n + 1):
        if n % gx:
            continue
        gy = n // gx
        score = abs(np.log((gx / gy) / aspect))
        if score < best_score:
            best, best_score = (gx, gy), score
    return best


def mesh_nodes(n: int, domain: Rect) -> np.ndarray:
    """(n, 2) coordinates of the state entries (cell centers, row-major)."""
    gx, gy = _mesh_shape(n, domain)
    xs = domain.x0 + (np.arange(gx) + 0.5) * domain.width / gx
    ys = domain.y0 + (np.arange(gy) + 0.5) * domain.height / gy
    xx, yy = np.meshgrid(xs, ys)
    return np.column_stack([xx.ravel(), yy.ravel()])


def nearest_node_index(pts: np.ndarray, n: int, domain: Rect) -> np.ndarray:
    """Index of the state entry nearest to each observation point."""
    gx, gy = _mesh_shape(n, domain)
    ix = np.clip(
        np.floor((pts[:, 0] - domain.x0) / domain.width * gx).astype(int), 0, gx - 1
    )
    iy = np.clip(
        np.floor((pts[:, 1] - domain.y0) / domain.height * gy).astype(int), 0, gy - 1
    )
    return iy * gx + ix


def _place_points(sc: Scenario, cells, domain, rng) -> tuple[np.ndarray, np.ndarray]:
    margin = 0.02
    pts = []
    owner = []

    def fill(box: Rect, count: int, cell_id: int):
        x = rng.uniform(box.x0 + margin * box.width, box.x1 - margin * box.width, count)
        y = rng.uniform(box.y0 + margin * box.height, box.y1 - margin * box.height, count)
        pts.append(np.column_stack([x, y]))
        owner.append(np.full(count, cell_id, dtype=np.int64))

    d = sc.distribution
    if d.kind == "uniform":
        base, extra = divmod(sc.m, sc.p)
        for i, cell in enumerate(cells):
            fill(cell, base + (1 if i < extra else 0), i)
    else:
        clustered = {c.cell for c in d.clusters}
        for cl in d.clusters:
            box = Rect(*cl.box)
            holder = cells[cl.cell]
            if not (
                holder.x0 <= box.x0 < box.x1 <= holder.x1
                and holder.y0 <= box.y0 < box.y1 <= holder.y1
            ):
                raise InfeasibleDistribution(
                    f"cluster box {cl.box} not inside cell {cl.cell}"
                )
            fill(box, cl.count, cl.cell)
        for i, count in enumerate(d.counts):
            if count > 0 and i not in clustered:
                fill(cells[i], count, i)
    points = np.vstack(pts) if pts else np.zeros((0, 2))
    owners = np.concatenate(owner) if owner else np.zeros(0, dtype=np.int64)
    return points, owners


def generate_scenario(sc: Scenario) -> tuple[CLSProblem, SpatialDecomposition]:
    """Deterministically realize a scenario as (CLSProblem, SpatialDecomposition).

    H0 is a seeded uniform [-1, 1] block of m0 = n + max(1, n//4) rows with a
    2*sqrt(m0) diagonal boost (full column rank, and strong enough block
    diagonal for the additive Schwarz sweep to contract). H1 holds one
    indicator row per observation pointing at the state entry nearest its
    location. Weights are identity (stored as diagonals). Data come from a
    seeded ground truth with small Gaussian noise.
    """
    rng = np.random.default_rng(sc.seed)
    domain, cells, edges = build_topology(sc.topology, sc.p)
    points, owners = _place_points(sc, cells, domain, rng)
    graph = ProcessorGraph(
        p=sc.p, edges=tuple(edges), loads=np.bincount(owners, minlength=sc.p)
    )
    deco = SpatialDecomposition(
        domain=domain,
        regions=[Region(c) for c in cells],
        points=points,
        owner=owners,
        graph=graph,
    )
    n = sc.n
    m0 = n + max(1, n // 4)
    h0 = rng.uniform(-1.0, 1.0, (m0, n))
    h0[:n, :n] += 2.0 * np.sqrt(m0) * np.eye(n)
    x_true = rng.standard_normal(n)
    y0 = h0 @ x_true + 0.01 * rng.standard_normal(m0)
    h1 = np.zeros((sc.m, n))
    h1[np.arange(sc.m), nearest_node_index(points, n, domain)] = 1.0
    y1 = h1 @ x_true + 0.01 * rng.standard_normal(sc.m)
    prob = CLSProblem(H0=h0, y0=y0, H1=h1, y1=y1, R0=np.ones(m0), R1=np.ones(sc.m))
    return prob, deco
