import numpy as np
import pytest

from court_prior.cocodata import Annotation, Category, Dataset, ImageRecord
from court_prior.court import CourtRegion, fallback_region
from court_prior.geometry import Polygon, convex_hull, inner_polygon
from court_prior.identity import Identity, anchor_point, classify, classify_dataset, classify_point, is_ball
from court_prior.raster import Rect

from conftest import boundary_distance, polygon_raster_oracle

CATS = {1: "human", 2: "Basketball"}


def square_region(band=0.2, mode="area"):
    hull = Polygon(((100, 100), (300, 100), (300, 300), (100, 300)))
    return CourtRegion(hull, Rect(100, 100, 200, 200), Rect(100, 50, 200, 250), inner_polygon(hull, band, mode), band)


def box_with_anchor(x, y, cat=1, w=10, h=30):
    return Annotation(1, 1, cat, (x - w / 2, y - h, w, h), [], 0.0)


def test_ball_by_name():
    r = square_region()
    assert is_ball("ball") and is_ball("Sports Ball") and not is_ball("human")
    for p in ((200, 200), (5, 5), (1000, 1000)):
        assert classify(box_with_anchor(*p, cat=2), r, CATS) is Identity.BALL


def test_anchor_is_bottom_centre():
    assert anchor_point((10, 20, 30, 40)) == (25, 60)


def test_centroid_is_player_outside_is_perimeter():
    r = square_region()
    assert classify(box_with_anchor(*r.hull.centroid), r, CATS) is Identity.PLAYER
    assert classify(box_with_anchor(50, 50), r, CATS) is Identity.PERIMETER
    # inside the hull but in the band
    assert classify(box_with_anchor(105, 200), r, CATS) is Identity.PERIMETER


def test_square_court_player_share():
    r = square_region()
    rng = np.random.default_rng(0)
    pts = rng.uniform(100, 300, (1000, 2))
    got = np.array([classify_point(p, r) is Identity.PLAYER for p in pts])
    # oracle: the interior is a centred square of side 200 * sqrt(0.8)
    half = 100 * np.sqrt(0.8)
    ref = (np.abs(pts - 200) <= half + 1e-6).all(axis=1)
    assert np.array_equal(got, ref)
    assert abs(got.mean() - 0.8) <= 0.03


def test_agrees_with_raster_oracle_on_fuzzed_courts():
    rng = np.random.default_rng(1)
    for _ in range(20):
        cx, cy = rng.integers(80, 120, 2)
        pts = np.stack([cx + rng.integers(-70, 70, 12), cy + rng.integers(-70, 70, 12)], axis=1)
        hull = convex_hull(pts)
        # integer interior vertices keep the Pillow oracle exact
        inner = Polygon(tuple((round(x), round(y)) for x, y in inner_polygon(hull, 0.2).vertices))
        region = CourtRegion(hull, Rect(0, 0, 200, 200), Rect(0, 0, 200, 200), inner)
        grid = polygon_raster_oracle(inner.vertices, 200, 200)
        for x, y in rng.integers(0, 200, (300, 2)):
            if boundary_distance(inner.vertices, (x, y)) <= 1:
                continue
            assert (classify_point((x, y), region) is Identity.PLAYER) == grid[y, x]


def test_shrinking_band_never_demotes_players():
    rng = np.random.default_rng(2)
    pts = rng.uniform(100, 300, (500, 2))
    prev = None
    for band in (0.4, 0.3, 0.2, 0.1, 0.0):
        players = np.array([classify_point(p, square_region(band)) is Identity.PLAYER for p in pts])
        if prev is not None:
            assert np.all(players[prev])
        prev = players


def test_linear_inset_mode():
    r = square_region(0.2, "linear_inset")
    assert np.isclose(r.interior.area, (200 * 0.8) ** 2)


def test_classify_dataset():
    ds = Dataset([ImageRecord(1, "a.png", 400, 400)],
                 [Annotation(1, 1, 1, (195, 170, 10, 30), [], 0.0), Annotation(2, 1, 2, (0, 0, 5, 5), [], 0.0),
                  Annotation(3, 1, 1, (0, 0, 5, 5), [], 0.0)],
                 [Category(1, "human"), Category(2, "ball")])
    out = classify_dataset(ds, {1: square_region()})
    assert out == {1: Identity.PLAYER, 2: Identity.BALL, 3: Identity.PERIMETER}


def test_fallback_region_classifies():
    r = fallback_region(1500, 900)
    assert classify_point((750, 450), r) is Identity.PLAYER
    assert classify_point((10, 10), r) is Identity.PERIMETER
