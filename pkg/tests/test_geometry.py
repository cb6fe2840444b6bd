import math
import random

import pytest

from textfuse.geometry import (
    ConvexPolygon,
    DegenerateInput,
    NonConvexQuad,
    Point,
    SelfIntersectingQuad,
    ZeroAreaQuad,
    area,
    canonicalize,
    difference,
    intersect,
    iou,
    min_area_rect,
)
from textfuse.oracle import grid_for, raster_area, raster_iou

from conftest import random_quad_pair, rect


def poly(*pts):
    return ConvexPolygon.from_points(pts)


def contains_point(p: ConvexPolygon, x: float, y: float, tol: float = 1e-6) -> bool:
    verts = p.vertices
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) < -tol:
            return False
    return True


class TestArea:
    def test_unit_square(self):
        assert area(poly((0, 0), (1, 0), (1, 1), (0, 1))) == 1.0

    def test_empty(self):
        assert area(ConvexPolygon(())) == 0.0

    def test_rectangle_matches_raster(self):
        p = poly((0, 0), (4, 0), (4, 2), (0, 2))
        assert area(p) == pytest.approx(8.0)
        g = grid_for([p], 1024)
        assert raster_area(p, g) == pytest.approx(8.0, rel=1e-2)

    def test_orientation_insensitive(self):
        cw = poly((0, 0), (0, 2), (4, 2), (4, 0))
        assert area(cw) == pytest.approx(8.0)


class TestIntersect:
    def test_identity(self):
        a = poly((0, 0), (1, 0), (1, 1), (0, 1))
        assert intersect(a, a).area() == pytest.approx(1.0)

    def test_disjoint(self):
        a = poly((0, 0), (1, 0), (1, 1), (0, 1))
        b = poly((5, 5), (6, 5), (6, 6), (5, 6))
        assert intersect(a, b).is_empty

    def test_axis_aligned_overlap(self):
        a = poly((0, 0), (2, 0), (2, 2), (0, 2))
        b = poly((1, 0), (3, 0), (3, 2), (1, 2))
        assert intersect(a, b).area() == pytest.approx(2.0)

    def test_area_commutative_and_bounded(self):
        rng = random.Random(31)
        for _ in range(200):
            a, b = random_quad_pair(rng)
            pa, pb = a.polygon(), b.polygon()
            iab, iba = intersect(pa, pb).area(), intersect(pb, pa).area()
            assert iab == pytest.approx(iba, abs=1e-6)
            assert iab <= min(pa.area(), pb.area()) + 1e-6


class TestIou:
    def test_identical(self):
        a = poly((0, 0), (1, 0), (1, 1), (0, 1))
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        a = poly((0, 0), (1, 0), (1, 1), (0, 1))
        b = poly((5, 5), (6, 5), (6, 6), (5, 6))
        assert iou(a, b) == 0.0

    def test_one_third(self):
        a = poly((0, 0), (2, 0), (2, 2), (0, 2))
        b = poly((1, 0), (3, 0), (3, 2), (1, 2))
        assert iou(a, b) == pytest.approx(1 / 3, abs=1e-2)

    def test_both_empty_raises(self):
        with pytest.raises(DegenerateInput):
            iou(ConvexPolygon(()), ConvexPolygon(()))

    def test_symmetric_and_in_range(self):
        rng = random.Random(7)
        for _ in range(300):
            a, b = random_quad_pair(rng)
            v = iou(a.polygon(), b.polygon())
            assert v == pytest.approx(iou(b.polygon(), a.polygon()), abs=1e-9)
            assert 0.0 <= v <= 1.0


class TestDifference:
    def test_disjoint_returns_original(self):
        a = poly((0, 0), (1, 0), (1, 1), (0, 1))
        b = poly((5, 5), (6, 5), (6, 6), (5, 6))
        assert difference(a, b) == [a]

    def test_full_overlap_empty(self):
        a = poly((0, 0), (1, 0), (1, 1), (0, 1))
        assert difference(a, a) == []

    def test_half_overlap_piece_area(self):
        a = poly((0, 0), (2, 0), (2, 2), (0, 2))
        b = poly((1, 0), (3, 0), (3, 2), (1, 2))
        pieces = difference(a, b)
        assert sum(p.area() for p in pieces) == pytest.approx(2.0)

    def test_conservation_random(self):
        rng = random.Random(99)
        for _ in range(300):
            a, b = random_quad_pair(rng)
            pa, pb = a.polygon(), b.polygon()
            si = intersect(pa, pb).area()
            total = si + sum(p.area() for p in difference(pa, pb))
            assert total == pytest.approx(pa.area(), rel=1e-6, abs=1e-6)
            assert len(difference(pa, pb)) <= 4


class TestMinAreaRect:
    def test_rectangle_fixpoint(self):
        r = rect(0, 0, 4, 2)
        fitted = min_area_rect(r.polygon())
        assert fitted.area() == pytest.approx(8.0)
        assert set(fitted.corners) == set(r.corners)

    def test_right_triangle(self):
        # brute force over edge-aligned orientations gives 4.0 (twice the
        # triangle area); every enclosing rectangle is at least that big
        t = poly((0, 0), (2, 0), (0, 2))
        assert min_area_rect(t).area() == pytest.approx(4.0)

    def test_empty_raises(self):
        with pytest.raises(DegenerateInput):
            min_area_rect(ConvexPolygon(()))

    def test_contains_vertices_and_beats_aabb(self):
        rng = random.Random(5)
        for _ in range(200):
            q, _ = random_quad_pair(rng)
            p = q.polygon()
            fitted = min_area_rect(p)
            xs = [v.x for v in p.vertices]
            ys = [v.y for v in p.vertices]
            aabb = (max(xs) - min(xs)) * (max(ys) - min(ys))
            assert fitted.area() <= aabb + 1e-6
            assert fitted.area() >= p.area() - 1e-6
            fp = fitted.polygon()
            for v in p.vertices:
                assert contains_point(fp, v.x, v.y)


class TestCanonicalize:
    def test_clockwise_input_flipped(self):
        q = canonicalize([(0, 0), (0, 5), (10, 5), (10, 0)])
        assert q.area() == pytest.approx(50.0)
        assert q.corners[0] == Point(0.0, 5.0)

    def test_bowtie_rejected(self):
        with pytest.raises(SelfIntersectingQuad):
            canonicalize([(0, 0), (1, 1), (1, 0), (0, 1)])

    def test_nonconvex_rejected(self):
        with pytest.raises(NonConvexQuad):
            canonicalize([(0, 0), (4, 0), (1, 1), (0, 4)])

    def test_zero_area_rejected(self):
        with pytest.raises(ZeroAreaQuad):
            canonicalize([(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_nan_rejected(self):
        with pytest.raises(DegenerateInput):
            canonicalize([(0, 0), (1, 0), (1, math.nan), (0, 1)])

    def test_bottom_left_first(self):
        # bottom-left in image coordinates: largest y, ties by smallest x
        q = canonicalize([(10, 0), (10, 5), (0, 5), (0, 0)])
        blx, bly = q.corners[0]
        for c in q.corners:
            assert (-(c.y), c.x) >= (-bly, blx)

    def test_idempotent(self):
        rng = random.Random(17)
        for _ in range(100):
            q, _ = random_quad_pair(rng)
            again = canonicalize(q.corners)
            assert again == q


class TestRasterAgreement:
    def test_iou_matches_oracle(self):
        rng = random.Random(1234)
        for _ in range(50):
            a, b = random_quad_pair(rng)
            pa, pb = a.polygon(), b.polygon()
            g = grid_for([pa, pb], 1024)
            assert iou(pa, pb) == pytest.approx(raster_iou(pa, pb, g), abs=1e-2)

    def test_intersection_contained_in_both(self):
        rng = random.Random(4321)
        hits = 0
        for _ in range(100):
            a, b = random_quad_pair(rng)
            inter = intersect(a.polygon(), b.polygon())
            if inter.is_empty:
                continue
            hits += 1
            # every intersection vertex and the centroid lie in both quads
            cx = sum(v.x for v in inter.vertices) / len(inter.vertices)
            cy = sum(v.y for v in inter.vertices) / len(inter.vertices)
            for q in (a, b):
                assert contains_point(q.polygon(), cx, cy)
                for v in inter.vertices:
                    assert contains_point(q.polygon(), v.x, v.y)
        assert hits > 20
