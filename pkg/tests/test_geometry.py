import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from court_prior.errors import DegenerateInput, InvalidFactor
from court_prior.geometry import (
    Polygon,
    bbox_of,
    clip_to_rect,
    contains,
    convex_hull,
    inner_polygon,
    shrink_toward_centroid,
    signed_area,
)
from court_prior.raster import Rect

from conftest import hull_oracle

UNIT = Polygon(((0, 0), (1, 0), (1, 1), (0, 1)))

points = st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=3, max_size=40)


def test_polygon_orientation_enforced():
    cw = Polygon(((0, 0), (0, 1), (1, 1), (1, 0)))
    assert signed_area(cw.vertices) > 0
    assert Polygon(((0, 0), (0, 0), (2, 0), (2, 2))).vertices == ((0, 0), (2, 0), (2, 2))
    with pytest.raises(DegenerateInput):
        Polygon(((0, 0), (1, 1), (2, 2)))


def test_hull_examples():
    h = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert set(h.vertices) == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert h.vertices[0] == (0, 0)
    tri = convex_hull([(3, 1), (0, 0), (1, 4)])
    assert set(tri.vertices) == {(3, 1), (0, 0), (1, 4)}
    with pytest.raises(DegenerateInput):
        convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])
    with pytest.raises(DegenerateInput):
        convex_hull([(0, 0), (0, 0), (1, 1)])


def test_hull_drops_collinear_boundary_points():
    h = convex_hull([(0, 0), (1, 0), (2, 0), (2, 2), (0, 2), (0, 1)])
    assert len(h.vertices) == 4


def test_hull_covers_random_points():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, (100, 2))
    h = convex_hull(pts)
    assert all(contains(h, p, eps=1e-9) for p in pts)


@settings(max_examples=150, deadline=None)
@given(points)
def test_hull_properties(pts):
    try:
        h = convex_hull(pts)
    except DegenerateInput:
        assert len(hull_oracle(pts)) < 3 or len(set(pts)) < 3
        return
    assert set(h.vertices) == hull_oracle(pts)
    assert h.is_convex and h.area > 0
    assert h.vertices[0] == min(h.vertices, key=lambda p: (p[1], p[0]))
    assert convex_hull(h.vertices) == h
    assert convex_hull(list(reversed(pts)) + pts[:3]) == h
    assert all(contains(h, p) for p in pts)


def test_contains_examples():
    assert contains(UNIT, (0.5, 0.5))
    assert not contains(UNIT, (1.5, 0.5))
    assert contains(UNIT, (1.0 + 0.5e-6, 0.5), eps=1e-6)
    assert not contains(UNIT, (1.0 + 2e-6, 0.5), eps=1e-6)


def test_contains_non_convex():
    # U shape: notch between x=1..2 above y=1
    u = Polygon(((0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)))
    assert not u.is_convex
    assert contains(u, (0.5, 2.5)) and contains(u, (2.5, 2.5))
    assert not contains(u, (1.5, 2.0))
    assert contains(u, (1.5, 1.0))  # on the boundary
    assert contains(u, (1.5, 1.0 + 5e-7), eps=1e-6)


def test_bbox_examples():
    assert bbox_of(Polygon(((0, 0), (10, 0), (5, 8)))) == Rect(0, 0, 10, 8)
    sq = Polygon(((2.4, 2.4), (7.6, 2.4), (7.6, 7.6), (2.4, 7.6)))
    assert bbox_of(sq) == Rect(2, 2, 6, 6)


def test_shrink_examples():
    sq = Polygon(((-1, -1), (1, -1), (1, 1), (-1, 1)))
    assert shrink_toward_centroid(sq, 1.0) == sq
    half = shrink_toward_centroid(sq, 0.5)
    assert set(half.vertices) == {(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)}
    s = shrink_toward_centroid(Polygon(((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5))), 0.5)
    assert set(s.vertices) == {(-0.25, -0.25), (0.25, -0.25), (0.25, 0.25), (-0.25, 0.25)}
    for bad in (0, -0.1, 1.01):
        with pytest.raises(InvalidFactor):
            shrink_toward_centroid(sq, bad)


@settings(max_examples=100, deadline=None)
@given(points, st.floats(0.05, 1.0))
def test_shrink_area_and_nesting(pts, f):
    try:
        h = convex_hull(pts)
    except DegenerateInput:
        return
    s = shrink_toward_centroid(h, f)
    assert math.isclose(s.area / h.area, f * f, rel_tol=1e-9)
    if f < 1:
        assert all(contains(h, v) for v in s.vertices)


def test_inner_polygon_modes():
    sq = Polygon(((0, 0), (10, 0), (10, 10), (0, 10)))
    assert math.isclose(inner_polygon(sq, 0.2).area, 80.0)
    assert math.isclose(inner_polygon(sq, 0.2, "linear_inset").area, 64.0)
    with pytest.raises(ValueError):
        inner_polygon(sq, 0.2, "bbox")


def test_clip_to_rect():
    ring = [(-5, 2), (5, 2), (5, 8), (-5, 8)]
    out = clip_to_rect(ring, 0, 0, 10, 10)
    assert math.isclose(abs(signed_area(out)), 30.0)
    assert clip_to_rect([(20, 20), (30, 20), (30, 30)], 0, 0, 10, 10) == []
    tri = [(1, 1), (4, 1), (1, 4)]
    assert math.isclose(abs(signed_area(clip_to_rect(tri, 0, 0, 10, 10))), 4.5)
