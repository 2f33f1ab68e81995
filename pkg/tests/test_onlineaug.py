import math

import numpy as np
import pytest

from court_prior.cocodata import Annotation, annotation_violations, hflip_annotations, retighten
from court_prior.onlineaug import (
    AugmentTrace,
    GridMaskConfig,
    OnlineAugConfig,
    area_crop_size,
    gridmask,
    gridmask_erase_mask,
    normalize,
    plan_online,
    run_online,
)
from court_prior.raster import Raster
from court_prior.rng import RngStream


def sample(w=350, h=200, seed=0):
    img = Raster(np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8))
    anns = [
        retighten(Annotation(1, 1, 1, (0, 0, 0, 0), [[20.0, 30.0, 80.0, 30.0, 80.0, 150.0, 20.0, 150.0]], 0.0), w, h),
        retighten(Annotation(2, 1, 1, (0, 0, 0, 0), [[200.5, 40.25, 300.0, 60.0, 250.0, 190.0]], 0.0), w, h),
    ]
    return img, anns


def test_config_validation():
    with pytest.raises(ValueError):
        OnlineAugConfig(crop_area_fraction=0)
    with pytest.raises(ValueError):
        OnlineAugConfig(resize_choices=())
    with pytest.raises(ValueError):
        GridMaskConfig(ratio=1.0)


def test_area_crop_size():
    assert area_crop_size(1400, 800, 0.7) == (1171, 669)
    assert area_crop_size(1400, 1200, 0.7) == (1171, 1003)


def test_forced_trace_dims():
    img, anns = sample()
    t = AugmentTrace(False, (1400, 800), (0, 0, 1171, 669), None)
    arr, out, _ = run_online((img, anns), None, OnlineAugConfig(), t)
    assert arr.shape == (669, 1171, 3) and arr.dtype == np.float32


def test_replay_is_bit_identical():
    img, anns = sample()
    arr, out, trace = run_online((img, anns), RngStream(3, ["online", 0, 1]), OnlineAugConfig())
    again, out2, _ = run_online((img, anns), None, OnlineAugConfig(), AugmentTrace.from_json(trace.to_json()))
    assert np.array_equal(arr, again)
    assert out == out2


def test_flip_only_matches_hflip_transform():
    img, anns = sample()
    cfg = OnlineAugConfig(resize_choices=((350, 200),), crop_area_fraction=1.0)
    t = AugmentTrace(True, (350, 200), (0, 0, 350, 200), None)
    _, out, _ = run_online((img, anns), None, cfg, t)
    assert out == hflip_annotations(anns, 350, 200)


def test_chain_output_and_invariant():
    img, anns = sample()
    cfg = OnlineAugConfig()
    for s in range(10):
        arr, out, t = run_online((img, anns), np.random.default_rng(s), cfg)
        h, w = arr.shape[:2]
        assert (w, h) == (t.crop[2], t.crop[3])
        assert abs(w * h / (t.resize[0] * t.resize[1]) - 0.7) <= 0.001
        for a in out:
            assert annotation_violations(a, w, h) == []


def test_normalize():
    img = Raster(np.full((1, 1, 3), [123.675, 116.28, 103.53], np.float64).round().astype(np.uint8))
    out = normalize(img, (10.0, 20.0, 30.0), (2.0, 4.0, 5.0))
    assert np.allclose(out[0, 0], [(124 - 10) / 2, (116 - 20) / 4, (104 - 30) / 5])


def test_plan_matches_run():
    img, anns = sample()
    cfg = OnlineAugConfig()
    planned = plan_online(RngStream(1, ["x"]), cfg, img.width, img.height)
    _, _, ran = run_online((img, anns), RngStream(1, ["x"]), cfg)
    assert planned == ran


def test_gridmask_apply_prob_zero_is_identity():
    img, _ = sample()
    out, erased = gridmask(img, np.random.default_rng(0), GridMaskConfig(apply_prob=0.0))
    assert out is img and not erased.any()


def test_gridmask_vanishing_holes():
    erased = gridmask_erase_mask(1000, 1000, 150, 7, 11, 0.99)
    assert erased.mean() < 0.001


def test_gridmask_tiling_by_hand():
    # d = 10, side = 5: pixel centres x + 0.5 - dx mod 10 < 5
    e = gridmask_erase_mask(20, 20, 10, 0, 0, 0.5)
    row = e[0].astype(int).tolist()
    assert row == ([1] * 5 + [0] * 5) * 2
    assert e.mean() == 0.25
    e = gridmask_erase_mask(20, 20, 10, 3, 0, 0.5)
    assert e[0].astype(int).tolist()[:10] == [0, 0, 0, 1, 1, 1, 1, 1, 0, 0]


def test_gridmask_erases_to_zero():
    img = Raster(np.full((300, 300, 3), 77, np.uint8))
    out, erased = gridmask(img, np.random.default_rng(3), GridMaskConfig(apply_prob=1.0))
    assert np.all(out.data[erased] == 0) and np.all(out.data[~erased] == 77)
    assert erased.any()


def test_rotated_gridmask_coverage():
    e = gridmask_erase_mask(1200, 1200, 100, 13, 40, 0.5, theta=30.0)
    assert abs(e.mean() - 0.25) <= 0.02
