"""Pipeline configuration: one YAML tree, strict keys, flag overrides.

Keys are namespaced (``court.canny_sigma``, ``online.gridmask.ratio`` ...).
Running ``python -m court_prior.config`` prints the reference table of every
key with its default.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .copypaste import CopyPasteConfig
from .court import CourtParams
from .errors import ConfigError
from .onlineaug import GridMaskConfig, OnlineAugConfig
from .styles import StyleConfig

# key -> (default, description)
SCHEMA: dict[str, tuple[Any, str]] = {
    "seed": (0, "Root seed for every random stream."),
    "threads": (1, "Worker threads, or 'auto' for the CPU count."),
    "paths.dataset": (None, "COCO annotation file (pipeline input)."),
    "paths.images": (None, "Directory holding the dataset images."),
    "paths.out_dir": (None, "Output directory for `pipeline`."),
    "court.canny_sigma": (1.4, "Gaussian sigma of the Canny operator (px)."),
    "court.canny_low": (50.0, "Hysteresis low threshold on Sobel magnitude."),
    "court.canny_high": (150.0, "Hysteresis high threshold on Sobel magnitude."),
    "court.hough_rho_resolution": (1.0, "Accumulator rho bin (px)."),
    "court.hough_theta_resolution": (math.pi / 180, "Accumulator theta bin (rad)."),
    "court.hough_vote_threshold": (80, "Minimum votes for a line candidate."),
    "court.hough_min_line_length_fraction": (0.25, "Minimum segment length as a fraction of min(W, H)."),
    "court.hough_max_line_gap": (10.0, "Largest gap (px) bridged inside one segment."),
    "court.hough_sample_fraction": (1.0, "Fraction of edge pixels that vote; 1.0 is exhaustive."),
    "court.formula": ("corners", "Crop formula reading: 'corners' or 'verbatim'."),
    "court.headroom_px": (50.0, "Pixels subtracted from the crop top."),
    "court.headroom_reference_height": (None, "If set, headroom scales by H / this height."),
    "identity.band_fraction": (0.20, "Share of the court treated as the perimeter band."),
    "identity.band_mode": ("area", "'area' (band holds that area share) or 'linear_inset'."),
    "styles.player.strength": (0.5, "Tone-curve distortion strength in [0, 1]."),
    "styles.perimeter.sp_density": (0.02, "Salt-and-pepper hit probability per masked pixel."),
    "styles.perimeter.brightness_range": ([0.8, 1.2], "Uniform brightness factor range."),
    "copypaste.duplication": (10, "Replicas per train/val image."),
    "copypaste.paste_min": (1, "Fewest patches pasted per replica."),
    "copypaste.paste_max": (4, "Most patches pasted per replica."),
    "copypaste.scale_range": ([0.8, 1.25], "Uniform patch scale range."),
    "copypaste.flip_prob": (0.5, "Probability of mirroring a patch."),
    "copypaste.min_visible_area": (16.0, "Annotations with fewer visible pixels are dropped."),
    "copypaste.same_court_only": (False, "Only paste patches harvested from the same court label."),
    "copypaste.crop_to_court": (True, "Crop replicas to the detected court crop first."),
    "copypaste.max_rejections": (1000, "Placement attempts before giving up on a replica."),
    "online.flip_prob": (0.5, "Horizontal flip probability."),
    "online.resize_choices": ([[1400, 800], [1400, 1200]], "Candidate (W, H) sizes, chosen uniformly."),
    "online.crop_area_fraction": (0.70, "Area share kept by the random crop."),
    "online.normalize_mean": ([123.675, 116.28, 103.53], "Per-channel mean."),
    "online.normalize_std": ([58.395, 57.12, 57.375], "Per-channel std."),
    "online.gridmask.ratio": (0.5, "Kept share of each grid unit's side."),
    "online.gridmask.d_min": (96, "Smallest grid unit (px)."),
    "online.gridmask.d_max": (224, "Largest grid unit (px)."),
    "online.gridmask.rotate_max": (0.0, "Largest grid rotation (degrees)."),
    "online.gridmask.apply_prob": (0.7, "Probability GridMask is applied."),
    "roi.max_side": (1400, "Longest side of an inference ROI (px)."),
}


def _flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value):
    default = SCHEMA[key][0]
    if key == "threads":
        if value == "auto":
            return value
        if isinstance(value, int) and not isinstance(value, bool) and value > 0:
            return value
        raise ConfigError(f"{key}: expected a positive integer or 'auto', got {value!r}")
    if default is None:
        if value is None or (isinstance(value, str) and key.startswith("paths.")):
            return value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"{key}: expected a number or null, got {value!r}")
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    if isinstance(default, list):
        if isinstance(value, (list, tuple)) and len(value) > 0:
            return list(value)
        raise ConfigError(f"{key}: expected a list, got {value!r}")
    return value


@dataclass
class PipelineConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    @property
    def threads(self) -> int:
        t = self.values["threads"]
        return (os.cpu_count() or 1) if t == "auto" else int(t)

    def court_params(self) -> CourtParams:
        v = self.values
        return CourtParams(
            canny_sigma=v["court.canny_sigma"],
            canny_low=v["court.canny_low"],
            canny_high=v["court.canny_high"],
            hough_rho_resolution=v["court.hough_rho_resolution"],
            hough_theta_resolution=v["court.hough_theta_resolution"],
            hough_vote_threshold=v["court.hough_vote_threshold"],
            hough_min_line_length_fraction=v["court.hough_min_line_length_fraction"],
            hough_max_line_gap=v["court.hough_max_line_gap"],
            hough_sample_fraction=v["court.hough_sample_fraction"],
            formula=v["court.formula"],
            headroom_px=v["court.headroom_px"],
            headroom_reference_height=v["court.headroom_reference_height"],
            band_fraction=v["identity.band_fraction"],
            band_mode=v["identity.band_mode"],
        )

    def style_config(self) -> StyleConfig:
        v = self.values
        return StyleConfig(v["styles.player.strength"], v["styles.perimeter.sp_density"],
                           tuple(v["styles.perimeter.brightness_range"]))

    def copypaste_config(self) -> CopyPasteConfig:
        v = self.values
        return CopyPasteConfig(
            duplication=v["copypaste.duplication"],
            paste_min=v["copypaste.paste_min"],
            paste_max=v["copypaste.paste_max"],
            scale_range=tuple(v["copypaste.scale_range"]),
            flip_prob=v["copypaste.flip_prob"],
            min_visible_area=v["copypaste.min_visible_area"],
            same_court_only=v["copypaste.same_court_only"],
            crop_to_court=v["copypaste.crop_to_court"],
            max_rejections=v["copypaste.max_rejections"],
        )

    def online_config(self) -> OnlineAugConfig:
        v = self.values
        return OnlineAugConfig(
            flip_prob=v["online.flip_prob"],
            resize_choices=tuple(tuple(int(s) for s in c) for c in v["online.resize_choices"]),
            crop_area_fraction=v["online.crop_area_fraction"],
            normalize_mean=tuple(v["online.normalize_mean"]),
            normalize_std=tuple(v["online.normalize_std"]),
            gridmask=GridMaskConfig(
                ratio=v["online.gridmask.ratio"],
                d_min=v["online.gridmask.d_min"],
                d_max=v["online.gridmask.d_max"],
                rotate_max=v["online.gridmask.rotate_max"],
                apply_prob=v["online.gridmask.apply_prob"],
            ),
            min_visible_area=v["copypaste.min_visible_area"],
        )


def defaults() -> dict:
    return {k: (list(v[0]) if isinstance(v[0], list) else v[0]) for k, v in SCHEMA.items()}


def build(tree: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    values = defaults()
    for source in (_flatten(tree or {}), overrides or {}):
        for key, val in source.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(key, val)
    cfg = PipelineConfig(values)
    try:
        cfg.court_params(), cfg.style_config(), cfg.copypaste_config(), cfg.online_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if cfg["court.formula"] not in ("corners", "verbatim"):
        raise ConfigError(f"court.formula must be 'corners' or 'verbatim', got {cfg['court.formula']!r}")
    if cfg["identity.band_mode"] not in ("area", "linear_inset"):
        raise ConfigError(f"identity.band_mode must be 'area' or 'linear_inset', got {cfg['identity.band_mode']!r}")
    return cfg


def load(path=None, overrides: dict | None = None) -> PipelineConfig:
    tree = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            tree = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: cannot parse config: {exc}") from exc
        if not isinstance(tree, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    return build(tree, overrides)


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with the value parsed as YAML (so ``0.3``, ``true``, ``[1, 2]`` work)."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def reference_markdown() -> str:
    lines = ["# Configuration reference", "", "| key | default | meaning |", "|---|---|---|"]
    for key, (default, doc) in SCHEMA.items():
        shown = "null" if default is None else yaml.safe_dump(default, default_flow_style=True).strip().removesuffix("...").strip()
        lines.append(f"| `{key}` | `{shown}` | {doc} |")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    print(reference_markdown(), end="")
