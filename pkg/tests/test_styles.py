import hashlib

import numpy as np
import pytest

from court_prior.errors import DimensionMismatch
from court_prior.identity import Identity
from court_prior.raster import Raster
from court_prior.rng import RngStream
from court_prior.styles import (
    RgbCurve,
    StyleConfig,
    apply_perimeter_style,
    apply_player_style,
    sample_curve,
    stylize,
)


def noise_img(h=40, w=50, seed=0):
    return Raster(np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8))


def test_rng_stream_contract():
    a = RngStream(42, ["image", 7, "paste", 3])
    assert a.bytes(64) == RngStream(42, ("image", 7, "paste", 3)).bytes(64)
    assert a.bytes(64) != RngStream(42, ["image", 7, "paste", 4]).bytes(64)
    assert a.bytes(64) != RngStream(43, ["image", 7, "paste", 3]).bytes(64)
    # typed labels: the int 7 and the string "7" are different paths
    assert RngStream(1, [7]).bytes(16) != RngStream(1, ["7"]).bytes(16)
    assert a.child("x") == RngStream(42, ["image", 7, "paste", 3, "x"])


def test_rng_streams_look_independent():
    x = RngStream(5, ["a"]).generator().random(20000)
    y = RngStream(5, ["b"]).generator().random(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.03


def test_identity_curve():
    c = sample_curve(np.random.default_rng(0), 0.0)
    assert c == RgbCurve()
    img = noise_img()
    assert apply_player_style(img, np.ones((40, 50), bool), c) == img


def test_curve_deterministic_and_monotone():
    a = sample_curve(RngStream(9, ["c"]), 1.0)
    assert a == sample_curve(RngStream(9, ["c"]), 1.0)
    g = np.random.default_rng(1)
    for _ in range(100_000):
        c = sample_curve(g, float(g.uniform(0, 1)))
        for ys in c.points:
            assert 0 <= ys[0] <= ys[1] <= ys[2] <= 255
    v = np.arange(256)
    for ch in range(3):
        assert np.all(np.diff(a.lut()[ch].astype(int)) >= 0)
        assert a.lut()[ch][0] == 0 and a.lut()[ch][255] == 255
    assert np.allclose(a.evaluate(0, v)[[0, 255]], [0, 255])


def test_curve_strength_spread():
    g = np.random.default_rng(2)
    curves = [sample_curve(g, 0.5) for _ in range(10_000)]
    for c in range(3):
        assert 19 <= np.mean([abs(k.points[c][1] - 128) for k in curves]) <= 29


def test_player_style_two_pixel_fixture():
    curve = RgbCurve(((64, 200, 210), (40, 100, 180), (64, 128, 192)))
    img = Raster(np.full((1, 2, 3), 128, np.uint8))
    out = apply_player_style(img, np.array([[True, False]]), curve)
    assert out.data[0, 0].tolist() == [200, 100, 128]
    assert out.data[0, 1].tolist() == [128, 128, 128]
    # between knots: f_G(96) = 40 + (96 - 64) / 64 * 60 = 70
    img = Raster(np.full((1, 1, 3), 96, np.uint8))
    assert apply_player_style(img, np.ones((1, 1), bool), curve).data[0, 0, 1] == 70


def test_empty_mask_and_dimension_checks():
    img = noise_img()
    curve = sample_curve(np.random.default_rng(3), 1.0)
    assert apply_player_style(img, np.zeros((40, 50), bool), curve) == img
    with pytest.raises(DimensionMismatch):
        apply_player_style(img, np.zeros((40, 49), bool), curve)
    with pytest.raises(DimensionMismatch):
        apply_perimeter_style(img, np.zeros((39, 50), bool), np.random.default_rng(0), 0.0, 1.0)


def test_perimeter_identity_and_saturation():
    img = noise_img()
    m = np.zeros((40, 50), bool)
    m[5:30, 10:40] = True
    assert apply_perimeter_style(img, m, np.random.default_rng(0), 0.0, 1.0) == img
    out = apply_perimeter_style(img, m, np.random.default_rng(0), 1.0, 1.0)
    px = out.data[m]
    assert np.all((px == 0).all(axis=1) | (px == 255).all(axis=1))
    assert np.array_equal(out.data[~m], img.data[~m])


def test_perimeter_brightness_clamps():
    img = Raster(np.full((2, 2, 3), 200, np.uint8))
    out = apply_perimeter_style(img, np.ones((2, 2), bool), np.random.default_rng(0), 0.0, 1.5)
    assert np.all(out.data == 255)
    out = apply_perimeter_style(img, np.ones((2, 2), bool), np.random.default_rng(0), 0.0, 0.5)
    assert np.all(out.data == 100)


def test_speckle_count_binomial():
    img = Raster(np.full((100, 100, 3), 128, np.uint8))
    out = apply_perimeter_style(img, np.ones((100, 100), bool), np.random.default_rng(4), 0.05, 1.0)
    hits = int(np.sum((out.data != 128).any(axis=2)))
    assert 400 <= hits <= 600


def test_styles_are_local_and_deterministic():
    rng = np.random.default_rng(5)
    for trial in range(20):
        img = noise_img(seed=trial)
        m = rng.random((40, 50)) < 0.3
        for ident in Identity:
            out = stylize(img, m, ident, RngStream(trial, ["s", ident.value]), StyleConfig(1.0, 0.1, (0.5, 1.5)))
            assert np.array_equal(out.data[~m], img.data[~m])
            again = stylize(img, m, ident, RngStream(trial, ["s", ident.value]), StyleConfig(1.0, 0.1, (0.5, 1.5)))
            assert hashlib.sha256(out.data.tobytes()).digest() == hashlib.sha256(again.data.tobytes()).digest()
