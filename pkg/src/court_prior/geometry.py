"""Planar geometry for court regions: hulls, containment, shrinking, clipping."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DegenerateInput, InvalidFactor
from .raster import Rect

Point = tuple[float, float]

DEFAULT_EPS = 1e-6


def cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def signed_area(pts: Sequence[Point]) -> float:
    """Shoelace area; positive for counterclockwise (y-up) vertex order."""
    n = len(pts)
    s = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def flat_to_points(flat: Sequence[float]) -> list[Point]:
    return [(float(flat[i]), float(flat[i + 1])) for i in range(0, len(flat) - 1, 2)]


def points_to_flat(pts: Iterable[Point]) -> list[float]:
    out: list[float] = []
    for x, y in pts:
        out.extend((float(x), float(y)))
    return out


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counterclockwise vertices (positive shoelace area)."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        pts = [(float(x), float(y)) for x, y in self.vertices]
        dedup: list[Point] = []
        for p in pts:
            if not dedup or p != dedup[-1]:
                dedup.append(p)
        while len(dedup) > 1 and dedup[0] == dedup[-1]:
            dedup.pop()
        if len(dedup) < 3:
            raise DegenerateInput(f"polygon needs 3 distinct vertices, got {len(dedup)}")
        a = signed_area(dedup)
        if a == 0:
            raise DegenerateInput("polygon has zero area")
        if a < 0:
            dedup.reverse()
        object.__setattr__(self, "vertices", tuple(dedup))

    @classmethod
    def from_rect(cls, r: Rect) -> "Polygon":
        return cls(((r.x, r.y), (r.right, r.y), (r.right, r.bottom), (r.x, r.bottom)))

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def centroid(self) -> Point:
        v = self.vertices
        n = len(v)
        a = cx = cy = 0.0
        for i in range(n):
            x0, y0 = v[i]
            x1, y1 = v[(i + 1) % n]
            c = x0 * y1 - x1 * y0
            a += c
            cx += (x0 + x1) * c
            cy += (y0 + y1) * c
        a *= 0.5
        return cx / (6 * a), cy / (6 * a)

    @property
    def is_convex(self) -> bool:
        v = self.vertices
        n = len(v)
        return all(cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= 0 for i in range(n))

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def as_lists(self) -> list[list[float]]:
        return [[x, y] for x, y in self.vertices]


def convex_hull(points: Iterable[Sequence[float]]) -> Polygon:
    """Andrew's monotone chain. Collinear boundary points are dropped.

    Vertices come back counterclockwise, starting at the point with the
    smallest y (ties broken by smallest x).
    """
    pts = sorted(set((float(p[0]), float(p[1])) for p in points))
    if len(pts) < 3:
        raise DegenerateInput(f"need at least 3 distinct points, got {len(pts)}")
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInput("all points are collinear")
    start = min(range(len(hull)), key=lambda i: (hull[i][1], hull[i][0]))
    return Polygon(tuple(hull[start:] + hull[:start]))


def _segment_distance(p: Point, a: Point, b: Point) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
    return math.hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy)


def contains(poly: Polygon, p: Sequence[float], eps: float = DEFAULT_EPS) -> bool:
    """True if ``p`` is inside ``poly`` or within ``eps`` of its boundary."""
    p = (float(p[0]), float(p[1]))
    v = poly.vertices
    n = len(v)
    if poly.is_convex:
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            length = math.hypot(b[0] - a[0], b[1] - a[1])
            if cross(a, b, p) / length < -eps:
                return False
        return True
    inside = False
    for i in range(n):
        (x0, y0), (x1, y1) = v[i], v[(i + 1) % n]
        if (y0 > p[1]) != (y1 > p[1]):
            xc = x0 + (p[1] - y0) * (x1 - x0) / (y1 - y0)
            if xc > p[0]:
                inside = not inside
    if inside:
        return True
    return any(_segment_distance(p, v[i], v[(i + 1) % n]) <= eps for i in range(n))


def bbox_of(poly: Polygon) -> Rect:
    xs = [x for x, _ in poly.vertices]
    ys = [y for _, y in poly.vertices]
    return Rect.from_ltrb(math.floor(min(xs)), math.floor(min(ys)), math.ceil(max(xs)), math.ceil(max(ys)))


def shrink_toward_centroid(poly: Polygon, factor: float) -> Polygon:
    """Similar copy of ``poly`` scaled about its area centroid (area scales by factor**2)."""
    if not (0 < factor <= 1):
        raise InvalidFactor(f"shrink factor must be in (0, 1], got {factor}")
    if factor == 1:
        return poly
    cx, cy = poly.centroid
    return Polygon(tuple((cx + factor * (x - cx), cy + factor * (y - cy)) for x, y in poly.vertices))


def inner_polygon(hull: Polygon, band_fraction: float, mode: str = "area") -> Polygon:
    """Interior region left after removing an outer band from ``hull``.

    ``area`` mode sizes the band to hold ``band_fraction`` of the hull area;
    ``linear_inset`` shrinks every linear dimension by ``band_fraction``.
    """
    if not (0 <= band_fraction < 1):
        raise InvalidFactor(f"band fraction must be in [0, 1), got {band_fraction}")
    if mode == "area":
        factor = math.sqrt(1.0 - band_fraction)
    elif mode == "linear_inset":
        factor = 1.0 - band_fraction
    else:
        raise ValueError(f"unknown band mode {mode!r}")
    return shrink_toward_centroid(hull, factor)


def clip_to_rect(pts: Sequence[Point], x0: float, y0: float, x1: float, y1: float) -> list[Point]:
    """Sutherland-Hodgman clip of a ring against the box [x0, x1] x [y0, y1]."""
    edges = (
        (lambda p: p[0] >= x0, lambda a, b: _cut_x(a, b, x0)),
        (lambda p: p[0] <= x1, lambda a, b: _cut_x(a, b, x1)),
        (lambda p: p[1] >= y0, lambda a, b: _cut_y(a, b, y0)),
        (lambda p: p[1] <= y1, lambda a, b: _cut_y(a, b, y1)),
    )
    out = list(pts)
    for inside, cut in edges:
        if not out:
            break
        src, out = out, []
        prev = src[-1]
        for cur in src:
            if inside(cur):
                if not inside(prev):
                    out.append(cut(prev, cur))
                out.append(cur)
            elif inside(prev):
                out.append(cut(prev, cur))
            prev = cur
    return out


def _cut_x(a: Point, b: Point, x: float) -> Point:
    t = (x - a[0]) / (b[0] - a[0])
    return (x, a[1] + t * (b[1] - a[1]))


def _cut_y(a: Point, b: Point, y: float) -> Point:
    t = (y - a[1]) / (b[1] - a[1])
    return (a[0] + t * (b[0] - a[0]), y)
