"""Axis-aligned geometry for the spatial decomposition.

A subdomain's territory starts as one rectangle but becomes a union of
rectangles once empty-subdomain splitting transfers pieces around, so cells
are stored as rectangle lists. Point membership uses half-open boxes
[x0, x1) x [y0, y1) with the domain's outer max edges treated as closed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, x: float, y: float, closed: bool = False) -> bool:
        hi_x = x <= self.x1 if closed else x < self.x1
        hi_y = y <= self.y1 if closed else y < self.y1
        return self.x0 <= x and hi_x and self.y0 <= y and hi_y

    def distance(self, x: float, y: float) -> float:
        dx = max(self.x0 - x, 0.0, x - self.x1)
        dy = max(self.y0 - y, 0.0, y - self.y1)
        return float(np.hypot(dx, dy))


class Region:
    """Union of non-overlapping axis-aligned rectangles."""

    def __init__(self, rects):
        rects = [rects] if isinstance(rects, Rect) else list(rects)
        if not rects:
            raise ValueError("region must contain at least one rectangle")
        self.rects: list[Rect] = rects

    @property
    def area(self) -> float:
        return sum(r.area for r in self.rects)

    @property
    def bbox(self) -> Rect:
        return Rect(
            min(r.x0 for r in self.rects),
            min(r.y0 for r in self.rects),
            max(r.x1 for r in self.rects),
            max(r.y1 for r in self.rects),
        )

    def contains(self, x: float, y: float, closed: bool = False) -> bool:
        return any(r.contains(x, y, closed) for r in self.rects)

    def distance(self, x: float, y: float) -> float:
        return min(r.distance(x, y) for r in self.rects)

    def distances(self, pts: np.ndarray) -> np.ndarray:
        """Distance from each row of pts (k, 2) to the region."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        d = np.full(pts.shape[0], np.inf)
        for r in self.rects:
            dx = np.maximum.reduce([r.x0 - pts[:, 0], np.zeros(len(pts)), pts[:, 0] - r.x1])
            dy = np.maximum.reduce([r.y0 - pts[:, 1], np.zeros(len(pts)), pts[:, 1] - r.y1])
            d = np.minimum(d, np.hypot(dx, dy))
        return d

    def split(self, axis: int, cut: float) -> tuple["Region | None", "Region | None"]:
        """Clip by the line {coord[axis] = cut}; returns (below/left, above/right).

        Either side may be None when the cut misses the region.
        """
        lo_rects, hi_rects = [], []
        for r in self.rects:
            a, b = (r.x0, r.x1) if axis == 0 else (r.y0, r.y1)
            if cut <= a:
                hi_rects.append(r)
            elif cut >= b:
                lo_rects.append(r)
            elif axis == 0:
                lo_rects.append(Rect(r.x0, r.y0, cut, r.y1))
                hi_rects.append(Rect(cut, r.y0, r.x1, r.y1))
            else:
                lo_rects.append(Rect(r.x0, r.y0, r.x1, cut))
                hi_rects.append(Rect(r.x0, cut, r.x1, r.y1))
        return (
            Region(lo_rects) if lo_rects else None,
            Region(hi_rects) if hi_rects else None,
        )

    def merged(self, other: "Region") -> "Region":
        return Region(self.rects + other.rects)

    def simplified(self) -> "Region":
        """Fuse rectangle pairs that share a full edge (keeps rect lists short)."""
        rects = list(self.rects)
        fused = True
        while fused and len(rects) > 1:
            fused = False
            for i in range(len(rects)):
                for j in range(i + 1, len(rects)):
                    merged = _fuse(rects[i], rects[j])
                    if merged is not None:
                        rects = [r for k, r in enumerate(rects) if k not in (i, j)]
                        rects.append(merged)
                        fused = True
                        break
                if fused:
                    break
        return Region(rects)

    def contact_axis(self, other: "Region") -> tuple[int, int] | None:
        """(axis, direction) of the longest shared boundary with `other`.

        axis 0 means the regions touch along a vertical line (split by x);
        direction +1 means `other` lies on the high side of self. None when
        the regions share no positive-length boundary.
        """
        best = None
        best_len = 0.0
        for r in self.rects:
            for s in other.rects:
                # vertical contact lines
                for coord, direction in ((r.x1, +1), (r.x0, -1)):
                    other_coord = s.x0 if direction > 0 else s.x1
                    if np.isclose(coord, other_coord):
                        shared = min(r.y1, s.y1) - max(r.y0, s.y0)
                        if shared > 1e-12 and shared > best_len:
                            best, best_len = (0, direction), shared
                # horizontal contact lines
                for coord, direction in ((r.y1, +1), (r.y0, -1)):
                    other_coord = s.y0 if direction > 0 else s.y1
                    if np.isclose(coord, other_coord):
                        shared = min(r.x1, s.x1) - max(r.x0, s.x0)
                        if shared > 1e-12 and shared > best_len:
                            best, best_len = (1, direction), shared
        return best


def _fuse(a: Rect, b: Rect) -> Rect | None:
    if np.isclose(a.y0, b.y0) and np.isclose(a.y1, b.y1):
        if np.isclose(a.x1, b.x0):
            return Rect(a.x0, a.y0, b.x1, a.y1)
        if np.isclose(b.x1, a.x0):
            return Rect(b.x0, a.y0, a.x1, a.y1)
    if np.isclose(a.x0, b.x0) and np.isclose(a.x1, b.x1):
        if np.isclose(a.y1, b.y0):
            return Rect(a.x0, a.y0, a.x1, b.y1)
        if np.isclose(b.y1, a.y0):
            return Rect(a.x0, b.y0, a.x1, a.y1)
    return None


def _rect_distance(a: Rect, b: Rect) -> float:
    dx = max(a.x0 - b.x1, b.x0 - a.x1, 0.0)
    dy = max(a.y0 - b.y1, b.y0 - a.y1, 0.0)
    return float(np.hypot(dx, dy))


def region_distance(a: Region, b: Region) -> float:
    """Minimum Euclidean distance between two regions (0 when they touch)."""
    return min(_rect_distance(ra, rb) for ra in a.rects for rb in b.rects)
