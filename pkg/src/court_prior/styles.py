"""Object-level appearance transforms keyed to an instance's identity.

Players get per-channel tone-curve distortion; officials and balls get
brightness jitter plus salt-and-pepper speckle. Only masked pixels change.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .raster import Raster
from .rng import RngStream, as_generator

__all__ = ["RgbCurve", "RngStream", "sample_curve", "apply_player_style", "apply_perimeter_style", "StyleConfig", "stylize"]

CURVE_X = (0.0, 64.0, 128.0, 192.0, 255.0)
IDENTITY_Y = (64.0, 128.0, 192.0)
MAX_SHIFT = 96.0


@dataclass(frozen=True)
class RgbCurve:
    """Monotone 5-point tone curve per channel with fixed (0,0) and (255,255) ends.

    ``points[c]`` holds the outputs at inputs 64, 128 and 192 for channel c.
    """

    points: tuple[tuple[float, float, float], ...] = (IDENTITY_Y, IDENTITY_Y, IDENTITY_Y)

    def __post_init__(self):
        if len(self.points) != 3:
            raise ValueError("RgbCurve needs one control triple per RGB channel")
        for ys in self.points:
            if not all(0 <= y <= 255 for y in ys) or not (ys[0] <= ys[1] <= ys[2]):
                raise ValueError(f"curve control points must be monotone in [0, 255]: {ys}")

    def evaluate(self, channel: int, v):
        return np.interp(v, CURVE_X, (0.0, *self.points[channel], 255.0))

    def lut(self) -> np.ndarray:
        """(3, 256) uint8 lookup table."""
        v = np.arange(256, dtype=np.float64)
        return np.stack([np.floor(self.evaluate(c, v) + 0.5) for c in range(3)]).astype(np.uint8)


def sample_curve(rng, strength: float) -> RgbCurve:
    if not (0 <= strength <= 1):
        raise ValueError(f"strength must be in [0, 1], got {strength}")
    if strength == 0:
        return RgbCurve()
    g = as_generator(rng)
    spread = MAX_SHIFT * strength
    points = []
    for _ in range(3):
        ys = [float(np.clip(g.uniform(c - spread, c + spread), 0, 255)) for c in IDENTITY_Y]
        points.append(tuple(sorted(ys)))
    return RgbCurve(tuple(points))


def _mask_bits(img: Raster, mask) -> np.ndarray:
    bits = getattr(mask, "bits", mask)
    bits = np.asarray(bits, dtype=bool)
    if bits.shape != (img.height, img.width):
        raise DimensionMismatch(f"mask {bits.shape[::-1]} vs image {img.width}x{img.height}")
    return bits


def apply_player_style(img: Raster, mask, curve: RgbCurve) -> Raster:
    bits = _mask_bits(img, mask)
    if img.channels != 3:
        raise DimensionMismatch("player style needs an RGB raster")
    lut = curve.lut()
    out = img.data.copy()
    px = out[bits]
    for c in range(3):
        px[:, c] = lut[c][px[:, c]]
    out[bits] = px
    return Raster(out)


def apply_perimeter_style(img: Raster, mask, rng, sp_density: float, brightness: float) -> Raster:
    """Scale masked pixels by ``brightness`` then speckle a Bernoulli subset black or white."""
    bits = _mask_bits(img, mask)
    if not (0 <= sp_density <= 1):
        raise ValueError("sp_density must be in [0, 1]")
    g = as_generator(rng)
    out = img.data.copy()
    px = out[bits].astype(np.float64)
    if brightness != 1.0:
        px = np.clip(np.floor(px * brightness + 0.5), 0, 255)
    n = px.shape[0]
    hit = g.random(n) < sp_density
    white = g.random(n) < 0.5
    px[hit & white] = 255
    px[hit & ~white] = 0
    out[bits] = px.astype(np.uint8)
    return Raster(out)


@dataclass(frozen=True)
class StyleConfig:
    player_strength: float = 0.5
    perimeter_sp_density: float = 0.02
    perimeter_brightness_range: tuple[float, float] = (0.8, 1.2)

    def __post_init__(self):
        if not (0 <= self.player_strength <= 1):
            raise ValueError("player_strength must be in [0, 1]")
        if not (0 <= self.perimeter_sp_density <= 1):
            raise ValueError("perimeter_sp_density must be in [0, 1]")
        lo, hi = self.perimeter_brightness_range
        if not (0 < lo <= hi):
            raise ValueError("perimeter_brightness_range needs 0 < low <= high")


def stylize(img: Raster, mask, identity, rng, cfg: StyleConfig = StyleConfig()) -> Raster:
    """Apply the style recipe for ``identity`` (a player or any other sub-class)."""
    g = as_generator(rng)
    if getattr(identity, "value", identity) == "player":
        return apply_player_style(img, mask, sample_curve(g, cfg.player_strength))
    lo, hi = cfg.perimeter_brightness_range
    return apply_perimeter_style(img, mask, g, cfg.perimeter_sp_density, float(g.uniform(lo, hi)))
