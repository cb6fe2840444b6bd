"""Planar geometry for rotated quadrilateral text boxes.

Coordinates are image pixels with y growing downward (screen convention).
Canonical vertex order has positive signed shoelace area in the stored
coordinates and starts at the bottom-left corner, i.e. the corner with the
largest y, ties broken by the smallest x.

All area comparisons use an absolute epsilon of 1e-9 in squared-pixel units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

AREA_EPS = 1e-9
# difference() pieces smaller than this fraction of the minuend are dropped
DUST_FRACTION = 1e-9


class GeometryError(ValueError):
    """Base class for geometric construction and computation failures."""


class DegenerateInput(GeometryError):
    pass


class NonConvexQuad(GeometryError):
    pass


class SelfIntersectingQuad(GeometryError):
    pass


class ZeroAreaQuad(GeometryError):
    pass


class Point(NamedTuple):
    x: float
    y: float


PointLike = Sequence[float]


def _as_point(p: PointLike) -> Point:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DegenerateInput(f"non-finite coordinate: ({p[0]}, {p[1]})")
    return Point(x, y)


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def signed_area(vertices: Sequence[Point]) -> float:
    """Shoelace signed area; positive for the canonical orientation."""
    n = len(vertices)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        p, q = vertices[i], vertices[(i + 1) % n]
        acc += p.x * q.y - q.x * p.y
    return acc / 2.0


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon in canonical orientation; empty polygon has no vertices."""

    vertices: tuple[Point, ...] = ()

    @classmethod
    def from_points(cls, points: Sequence[PointLike]) -> "ConvexPolygon":
        pts = [_as_point(p) for p in points]
        if len(pts) < 3:
            return cls(())
        if signed_area(pts) < 0:
            pts.reverse()
        pts = _strip_degenerate_vertices(pts)
        if len(pts) < 3 or signed_area(pts) <= AREA_EPS:
            return cls(())
        for i in range(len(pts)):
            o, a, b = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            if _cross(o, a, b) < -AREA_EPS:
                raise NonConvexQuad(f"points are not in convex position: {points}")
        return cls(tuple(pts))

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def area(self) -> float:
        return max(0.0, signed_area(self.vertices))


def _strip_degenerate_vertices(pts: list[Point]) -> list[Point]:
    """Drop repeated and collinear vertices, preserving order."""
    out: list[Point] = []
    for p in pts:
        if out and abs(p.x - out[-1].x) < 1e-9 and abs(p.y - out[-1].y) < 1e-9:
            continue
        out.append(p)
    while len(out) > 1 and abs(out[0].x - out[-1].x) < 1e-9 and abs(out[0].y - out[-1].y) < 1e-9:
        out.pop()
    if len(out) < 3:
        return out
    cleaned: list[Point] = []
    n = len(out)
    for i in range(n):
        o, a, b = out[i - 1], out[i], out[(i + 1) % n]
        if abs(_cross(o, a, b)) > AREA_EPS or _seg_turns(o, a, b):
            cleaned.append(a)
    return cleaned


def _seg_turns(o: Point, a: Point, b: Point) -> bool:
    # keep a collinear vertex only if the path reverses direction through it
    return (b.x - a.x) * (a.x - o.x) + (b.y - a.y) * (a.y - o.y) < 0


@dataclass(frozen=True)
class QuadBox:
    """Convex 4-corner text box, canonical order (bottom-left first, positive area)."""

    corners: tuple[Point, Point, Point, Point]

    def polygon(self) -> ConvexPolygon:
        return ConvexPolygon(self.corners)

    def area(self) -> float:
        return max(0.0, signed_area(self.corners))

    def flat(self) -> tuple[float, ...]:
        return tuple(c for p in self.corners for c in p)


def area(p: ConvexPolygon) -> float:
    """Shoelace area of a canonical convex polygon; 0 for the empty polygon."""
    return p.area()


def _rotate_to_bottom_left(pts: list[Point]) -> list[Point]:
    start = min(range(len(pts)), key=lambda i: (-pts[i].y, pts[i].x))
    return pts[start:] + pts[:start]


def canonicalize(points: Sequence[PointLike]) -> QuadBox:
    """Validate 4 raw corner points and put them in canonical order.

    The given cyclic order is respected (only rotation and reversal are
    applied); a bow-tie vertex order is rejected rather than repaired.
    """
    if len(points) != 4:
        raise DegenerateInput(f"expected 4 points, got {len(points)}")
    pts = [_as_point(p) for p in points]

    crosses = [_cross(pts[i - 1], pts[i], pts[(i + 1) % 4]) for i in range(4)]
    pos = sum(1 for c in crosses if c > AREA_EPS)
    neg = sum(1 for c in crosses if c < -AREA_EPS)
    if pos and neg:
        if pos == neg:
            raise SelfIntersectingQuad(f"corner order self-intersects: {points}")
        raise NonConvexQuad(f"quad is not convex: {points}")
    if signed_area(pts) < 0:
        pts.reverse()
    if signed_area(pts) <= AREA_EPS:
        raise ZeroAreaQuad(f"quad has zero area: {points}")
    pts = _rotate_to_bottom_left(pts)
    return QuadBox((pts[0], pts[1], pts[2], pts[3]))


def _clip_halfplane(vertices: Sequence[Point], a: Point, b: Point, keep_left: bool) -> list[Point]:
    """Clip a polygon against the line through a->b, keeping one side.

    keep_left keeps the interior side of a canonically oriented polygon edge.
    """
    if not vertices:
        return []
    sign = 1.0 if keep_left else -1.0

    def side(p: Point) -> float:
        return sign * _cross(a, b, p)

    out: list[Point] = []
    n = len(vertices)
    for i in range(n):
        cur, nxt = vertices[i], vertices[(i + 1) % n]
        sc, sn = side(cur), side(nxt)
        if sc >= -AREA_EPS:
            out.append(cur)
        if (sc > AREA_EPS and sn < -AREA_EPS) or (sc < -AREA_EPS and sn > AREA_EPS):
            t = sc / (sc - sn)
            out.append(Point(cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)))
    return out


def _finish(vertices: list[Point]) -> ConvexPolygon:
    vertices = _strip_degenerate_vertices(vertices)
    if len(vertices) < 3 or signed_area(vertices) <= AREA_EPS:
        return ConvexPolygon(())
    return ConvexPolygon(tuple(vertices))


def intersect(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon:
    """Convex intersection via half-plane clipping of `a` against `b`'s edges."""
    if a.is_empty or b.is_empty:
        return ConvexPolygon(())
    verts = list(a.vertices)
    bv = b.vertices
    for i in range(len(bv)):
        verts = _clip_halfplane(verts, bv[i], bv[(i + 1) % len(bv)], keep_left=True)
        if not verts:
            return ConvexPolygon(())
    return _finish(verts)


def iou(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Intersection over union; symmetric, in [0, 1]."""
    sa, sb = a.area(), b.area()
    if sa + sb <= AREA_EPS:
        raise DegenerateInput("both polygons have zero area")
    si = intersect(a, b).area()
    union = sa + sb - si
    if union <= AREA_EPS:
        return 1.0
    return min(1.0, max(0.0, si / union))


def difference(a: ConvexPolygon, b: ConvexPolygon) -> list[ConvexPolygon]:
    """Decompose a \\ b into disjoint convex pieces, one per clipping edge of b.

    Pieces with area below DUST_FRACTION * area(a) are dropped.
    """
    if a.is_empty:
        return []
    if b.is_empty:
        return [a]
    if intersect(a, b).is_empty:
        return [a]
    dust = DUST_FRACTION * a.area()
    pieces: list[ConvexPolygon] = []
    remaining = list(a.vertices)
    bv = b.vertices
    for i in range(len(bv)):
        p1, p2 = bv[i], bv[(i + 1) % len(bv)]
        outside = _finish(_clip_halfplane(remaining, p1, p2, keep_left=False))
        if not outside.is_empty and outside.area() > max(dust, AREA_EPS):
            pieces.append(outside)
        remaining = _clip_halfplane(remaining, p1, p2, keep_left=True)
        if not remaining:
            break
    return pieces


def min_area_rect(p: ConvexPolygon) -> QuadBox:
    """Minimum-area enclosing rotated rectangle by rotating calipers."""
    if p.is_empty or p.area() <= AREA_EPS:
        raise DegenerateInput("cannot fit a rectangle around a zero-area polygon")
    verts = p.vertices
    n = len(verts)
    best: tuple[float, float, float, float, float, float, float] | None = None
    for i in range(n):
        e = Point(verts[(i + 1) % n].x - verts[i].x, verts[(i + 1) % n].y - verts[i].y)
        norm = math.hypot(e.x, e.y)
        if norm < 1e-12:
            continue
        ux, uy = e.x / norm, e.y / norm
        us = [v.x * ux + v.y * uy for v in verts]
        vs = [-v.x * uy + v.y * ux for v in verts]
        u0, u1, v0, v1 = min(us), max(us), min(vs), max(vs)
        rect_area = (u1 - u0) * (v1 - v0)
        if best is None or rect_area < best[0]:
            best = (rect_area, ux, uy, u0, u1, v0, v1)
    assert best is not None
    _, ux, uy, u0, u1, v0, v1 = best
    corners = [
        Point(u * ux - v * uy, u * uy + v * ux)
        for u, v in ((u0, v0), (u1, v0), (u1, v1), (u0, v1))
    ]
    return canonicalize(corners)
