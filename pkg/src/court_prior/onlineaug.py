"""Per-sample online augmentation: flip, resize, area crop, normalise, GridMask."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cocodata import MIN_VISIBLE_AREA, Annotation, crop_annotations, hflip_annotations, resize_annotations
from .raster import Raster, Rect, crop, hflip, resize
from .rng import as_generator


@dataclass(frozen=True)
class GridMaskConfig:
    ratio: float = 0.5  # kept fraction of each unit's side
    d_min: int = 96
    d_max: int = 224
    rotate_max: float = 0.0  # degrees
    apply_prob: float = 0.7

    def __post_init__(self):
        if not (0 < self.ratio < 1):
            raise ValueError("gridmask ratio must be in (0, 1)")
        if not (0 < self.d_min <= self.d_max):
            raise ValueError("gridmask needs 0 < d_min <= d_max")


@dataclass(frozen=True)
class OnlineAugConfig:
    flip_prob: float = 0.5
    resize_choices: tuple[tuple[int, int], ...] = ((1400, 800), (1400, 1200))
    crop_area_fraction: float = 0.70
    normalize_mean: tuple[float, float, float] = (123.675, 116.28, 103.53)
    normalize_std: tuple[float, float, float] = (58.395, 57.12, 57.375)
    gridmask: GridMaskConfig = field(default_factory=GridMaskConfig)
    min_visible_area: float = MIN_VISIBLE_AREA

    def __post_init__(self):
        if not (0 < self.crop_area_fraction <= 1):
            raise ValueError("crop_area_fraction must be in (0, 1]")
        if not self.resize_choices:
            raise ValueError("resize_choices must not be empty")


@dataclass
class AugmentTrace:
    """Every random decision of one chain run; replaying it reproduces the output."""

    flipped: bool
    resize: tuple[int, int]
    crop: tuple[int, int, int, int]
    gridmask: dict | None = None  # {"d", "dx", "dy", "theta"} when applied
    sample_id: object = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["resize"] = list(self.resize)
        d["crop"] = list(self.crop)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "AugmentTrace":
        return cls(bool(d["flipped"]), tuple(d["resize"]), tuple(d["crop"]), d.get("gridmask"), d.get("sample_id"))


def gridmask_erase_mask(height: int, width: int, d: int, dx: int, dy: int, ratio: float, theta: float = 0.0) -> np.ndarray:
    """Boolean map of pixels erased by a grid of (1 - ratio) * d squares with period d."""
    side = (1.0 - ratio) * d
    if theta == 0.0:
        u = ((np.arange(width) + 0.5 - dx) % d) < side
        v = ((np.arange(height) + 0.5 - dy) % d) < side
        return v[:, None] & u[None, :]
    t = math.radians(theta)
    cx, cy = width / 2, height / 2
    xs = np.arange(width) + 0.5 - cx
    ys = np.arange(height) + 0.5 - cy
    X, Y = np.meshgrid(xs, ys)
    u = X * math.cos(t) + Y * math.sin(t) + cx
    v = -X * math.sin(t) + Y * math.cos(t) + cy
    return (((u - dx) % d) < side) & (((v - dy) % d) < side)


def draw_gridmask(rng, cfg: GridMaskConfig) -> dict | None:
    g = as_generator(rng)
    if not (g.random() < cfg.apply_prob):
        return None
    d = int(g.integers(cfg.d_min, cfg.d_max + 1))
    dx, dy = (int(v) for v in g.integers(0, d, size=2))
    theta = float(g.uniform(-cfg.rotate_max, cfg.rotate_max)) if cfg.rotate_max > 0 else 0.0
    return {"d": d, "dx": dx, "dy": dy, "theta": theta}


def gridmask(img, rng, cfg: GridMaskConfig = GridMaskConfig(), params: dict | None = None):
    """Erase grid blocks; returns (image, erased-pixel mask).

    Accepts a Raster or a float (H, W, C) array and returns the same kind.
    ``params`` replays a previous draw instead of consuming ``rng``.
    """
    arr = img.data if isinstance(img, Raster) else np.asarray(img)
    h, w = arr.shape[:2]
    if params is None:
        params = draw_gridmask(rng, cfg)
    if params is None:
        return img, np.zeros((h, w), dtype=bool)
    erased = gridmask_erase_mask(h, w, params["d"], params["dx"], params["dy"], cfg.ratio, params["theta"])
    out = arr.copy()
    out[erased] = 0
    return (Raster(out) if isinstance(img, Raster) else out), erased


def area_crop_size(width: int, height: int, fraction: float) -> tuple[int, int]:
    s = math.sqrt(fraction)
    return max(1, math.floor(width * s)), max(1, math.floor(height * s))


def normalize(img: Raster, mean, std) -> np.ndarray:
    return (img.data.astype(np.float32) - np.asarray(mean, np.float32)) / np.asarray(std, np.float32)


def plan_online(rng, cfg: OnlineAugConfig, width: int, height: int, sample_id=None) -> AugmentTrace:
    """Draw every random decision of one chain run for a ``width`` x ``height`` input."""
    g = as_generator(rng)
    flipped = bool(g.random() < cfg.flip_prob)
    size = tuple(cfg.resize_choices[int(g.integers(len(cfg.resize_choices)))])
    cw, ch = area_crop_size(size[0], size[1], cfg.crop_area_fraction)
    c = (int(g.integers(0, size[0] - cw + 1)), int(g.integers(0, size[1] - ch + 1)), cw, ch)
    return AugmentTrace(flipped, size, c, draw_gridmask(g, cfg.gridmask), sample_id)


def run_online(sample: tuple[Raster, list[Annotation]], rng, cfg: OnlineAugConfig = OnlineAugConfig(),
               trace: AugmentTrace | None = None):
    """Apply the chain to (image, annotations); returns (float image, annotations, trace).

    With ``trace`` the recorded decisions are replayed and ``rng`` is unused.
    """
    img, anns = sample
    if trace is None:
        trace = plan_online(rng, cfg, img.width, img.height)

    if trace.flipped:
        anns = hflip_annotations(anns, img.width, img.height)
        img = hflip(img)

    size = tuple(trace.resize)
    anns = resize_annotations(anns, size[0] / img.width, size[1] / img.height, size[0], size[1])
    img = resize(img, size[0], size[1])

    c = Rect(*trace.crop)
    anns = crop_annotations(anns, c, cfg.min_visible_area)
    img = crop(img, c)

    arr = normalize(img, cfg.normalize_mean, cfg.normalize_std)
    if trace.gridmask is not None:
        arr, _ = gridmask(arr, None, cfg.gridmask, params=trace.gridmask)
    return arr, anns, trace
