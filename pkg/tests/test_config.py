import os
from pathlib import Path

import pytest

from court_prior import config
from court_prior.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def test_defaults_build_params():
    cfg = config.build()
    assert cfg.seed == 0 and cfg.threads == 1
    cp = cfg.court_params()
    assert (cp.canny_sigma, cp.canny_low, cp.canny_high) == (1.4, 50.0, 150.0)
    assert cp.band_fraction == 0.2 and cp.formula == "corners"
    assert cfg.copypaste_config().duplication == 10
    assert cfg.online_config().resize_choices == ((1400, 800), (1400, 1200))
    assert cfg.style_config().perimeter_brightness_range == (0.8, 1.2)


def test_yaml_tree_and_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 5\ncourt:\n  canny_low: 40\nstyles:\n  player:\n    strength: 0.9\nonline:\n  gridmask:\n    ratio: 0.3\n")
    cfg = config.load(p, {"seed": 8, "court.canny_low": 30})
    assert cfg.seed == 8  # flags win over the file
    assert cfg.court_params().canny_low == 30.0
    assert cfg.style_config().player_strength == 0.9
    assert cfg.online_config().gridmask.ratio == 0.3


def test_unknown_keys_fail_fast(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("court:\n  canny_lwo: 40\n")
    with pytest.raises(ConfigError, match="court.canny_lwo"):
        config.load(p)
    with pytest.raises(ConfigError):
        config.build(overrides={"nope": 1})


@pytest.mark.parametrize("key, value", [
    ("seed", "x"), ("threads", 0), ("court.formula", "other"), ("identity.band_mode", "bbox"),
    ("copypaste.same_court_only", 1), ("styles.player.strength", 2.0), ("online.crop_area_fraction", 0.0),
])
def test_bad_values(key, value):
    with pytest.raises(ConfigError):
        config.build(overrides={key: value})


def test_threads_auto():
    assert config.build(overrides={"threads": "auto"}).threads == (os.cpu_count() or 1)


def test_parse_override():
    assert config.parse_override("online.resize_choices=[[10, 20]]") == ("online.resize_choices", [[10, 20]])
    assert config.parse_override("copypaste.crop_to_court=false") == ("copypaste.crop_to_court", False)
    with pytest.raises(ConfigError):
        config.parse_override("seed")


def test_missing_file():
    with pytest.raises(FileNotFoundError, match="absent.yaml"):
        config.load("absent.yaml")


def test_reference_page_is_current():
    page = (ROOT / "docs" / "config-reference.md").read_text()
    assert page == config.reference_markdown()
    for key in config.SCHEMA:
        assert f"`{key}`" in page
