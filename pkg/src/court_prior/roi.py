"""Reduced-size inference inputs cut from the court crop, and the inverse mapping."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .court import CourtRegion
from .raster import Raster, Rect, crop, resize, scaled_dims


@dataclass(frozen=True)
class RoiTransform:
    crop: Rect
    scale: tuple[float, float]
    original_dims: tuple[int, int]
    roi_dims: tuple[int, int]

    def forward(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.crop.x) * self.scale[0], (y - self.crop.y) * self.scale[1]

    def inverse(self, x: float, y: float) -> tuple[float, float]:
        return x / self.scale[0] + self.crop.x, y / self.scale[1] + self.crop.y

    def to_json(self, **extra) -> dict:
        d = dict(extra)
        d.update(crop=self.crop.as_list(), scale=list(self.scale), original_dims=list(self.original_dims),
                 roi_dims=list(self.roi_dims))
        return d

    @classmethod
    def from_json(cls, d: dict) -> "RoiTransform":
        return cls(Rect(*d["crop"]), tuple(d["scale"]), tuple(d["original_dims"]), tuple(d["roi_dims"]))


def make_roi(img: Raster, region: CourtRegion, max_side: int = 1400) -> tuple[Raster, RoiTransform]:
    """Crop to the court and downscale uniformly so the long side fits ``max_side``."""
    if max_side <= 0:
        raise ValueError("max_side must be positive")
    cut = crop(img, region.crop)
    c = region.crop.intersect(img.bounds)
    long_side = max(cut.width, cut.height)
    if long_side > max_side:
        s = max_side / long_side
        rw, rh = scaled_dims(cut.width, cut.height, s)
        rw, rh = min(rw, max_side), min(rh, max_side)
        cut = resize(cut, rw, rh)
    t = RoiTransform(c, (cut.width / c.w, cut.height / c.h), (img.width, img.height), (cut.width, cut.height))
    return cut, t


def map_back(det: dict, t: RoiTransform) -> dict:
    """Detection in ROI pixels -> detection in original-image pixels (score untouched)."""
    out = dict(det)
    if "bbox" in det:
        x, y, w, h = det["bbox"]
        x0, y0 = t.inverse(x, y)
        x1, y1 = t.inverse(x + w, y + h)
        out["bbox"] = [x0, y0, x1 - x0, y1 - y0]
    if det.get("segmentation"):
        polys = []
        for flat in det["segmentation"]:
            p = []
            for i in range(0, len(flat), 2):
                p.extend(t.inverse(flat[i], flat[i + 1]))
            polys.append(p)
        out["segmentation"] = polys
    return out


def save_transforms(path, records: list[dict]) -> None:
    Path(path).write_text(json.dumps(records, indent=1) + "\n")


def load_transforms(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"transforms file not found: {path}")
    return {rec["image_id"]: RoiTransform.from_json(rec) for rec in json.loads(path.read_text())}


def read_detections(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"detections file not found: {path}")
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def write_detections(path, dets) -> None:
    Path(path).write_text("".join(json.dumps(d) + "\n" for d in dets))
