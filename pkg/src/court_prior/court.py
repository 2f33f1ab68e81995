"""Court detection and cropping from image-level priors.

Lines are found with Canny + Hough, the court is the convex hull of all
segment endpoints, and the crop rectangle is clamped between that hull and
static margins derived from the frame size.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import edgelines
from .errors import DegenerateInput, ImageTooSmall, MissingRegion
from .geometry import Polygon, bbox_of, convex_hull, inner_polygon
from .raster import Raster, Rect, to_gray
from .rng import RngStream

MIN_SIDE = 64


@dataclass(frozen=True)
class CourtParams:
    canny_sigma: float = 1.4
    canny_low: float = 50.0
    canny_high: float = 150.0
    hough_rho_resolution: float = 1.0
    hough_theta_resolution: float = math.pi / 180
    hough_vote_threshold: int = 80
    hough_min_line_length_fraction: float = 0.25
    hough_max_line_gap: float = 10.0
    hough_sample_fraction: float = 1.0
    # "corners": hull bbox right/bottom are read as coordinates; "verbatim": as extents
    formula: str = "corners"
    headroom_px: float = 50.0
    # when set, headroom scales with frame height relative to this value
    headroom_reference_height: float | None = None
    band_fraction: float = 0.20
    band_mode: str = "area"

    def hough_params(self, width: int, height: int) -> edgelines.HoughParams:
        return edgelines.HoughParams(
            rho_resolution=self.hough_rho_resolution,
            theta_resolution=self.hough_theta_resolution,
            vote_threshold=self.hough_vote_threshold,
            min_line_length=self.hough_min_line_length_fraction * min(width, height),
            max_line_gap=self.hough_max_line_gap,
            sample_fraction=self.hough_sample_fraction,
        )


@dataclass(frozen=True)
class StaticMargins:
    min_h: float
    max_h: float
    min_w: float
    max_w: float

    @classmethod
    def for_size(cls, width: int, height: int) -> "StaticMargins":
        return cls(height / 9, 8 * height / 9, width / 15, 14 * width / 15)

    def rect(self) -> Rect:
        return Rect.from_ltrb(math.floor(self.min_w), math.floor(self.min_h), math.ceil(self.max_w), math.ceil(self.max_h))


@dataclass(frozen=True)
class CourtRegion:
    hull: Polygon
    hull_bbox: Rect
    crop: Rect
    interior: Polygon
    band_area_fraction: float = 0.20
    fallback_used: bool = False
    width: int = 0
    height: int = 0
    segments: tuple = field(default=(), compare=False, repr=False)

    def translated(self, dx: float, dy: float) -> "CourtRegion":
        """Region expressed in a frame shifted by (dx, dy), e.g. after cropping."""
        c = self.crop
        hb = self.hull_bbox
        return CourtRegion(
            hull=self.hull.translated(dx, dy),
            hull_bbox=Rect(hb.x + int(dx), hb.y + int(dy), hb.w, hb.h),
            crop=Rect(c.x + int(dx), c.y + int(dy), c.w, c.h),
            interior=self.interior.translated(dx, dy),
            band_area_fraction=self.band_area_fraction,
            fallback_used=self.fallback_used,
            width=self.width,
            height=self.height,
        )


def crop_from_hull_bbox(hb: Rect, width: int, height: int, params: CourtParams = CourtParams()) -> Rect:
    """Evaluate the crop formula for a hull bounding box and clamp it to the frame.

    Returns an empty Rect when the formula collapses.
    """
    m = StaticMargins.for_size(width, height)
    headroom = params.headroom_px
    if params.headroom_reference_height:
        headroom *= height / params.headroom_reference_height
    if params.formula == "corners":
        left = min(m.min_w, hb.x)
        top = max(m.min_h, hb.y) - headroom
        right = max(m.min_w, hb.right)
        bottom = min(m.max_h, hb.bottom)
    elif params.formula == "verbatim":
        left = min(m.min_w, hb.x)
        top = max(m.min_h, hb.y) - headroom
        right = left + max(m.min_w, hb.w)
        bottom = top + min(m.max_h, hb.h)
    else:
        raise ValueError(f"unknown court formula {params.formula!r}")
    left = max(0, math.floor(left))
    top = max(0, math.floor(top))
    right = min(width, math.ceil(right))
    bottom = min(height, math.ceil(bottom))
    if right <= left or bottom <= top:
        return Rect(left, top, 0, 0)
    return Rect.from_ltrb(left, top, right, bottom)


def fallback_region(width: int, height: int, params: CourtParams = CourtParams()) -> CourtRegion:
    static = StaticMargins.for_size(width, height).rect()
    hull = Polygon.from_rect(static)
    return CourtRegion(
        hull=hull,
        hull_bbox=static,
        crop=static,
        interior=inner_polygon(hull, params.band_fraction, params.band_mode),
        band_area_fraction=params.band_fraction,
        fallback_used=True,
        width=width,
        height=height,
    )


def region_from_segments(segments, width: int, height: int, params: CourtParams = CourtParams()) -> CourtRegion:
    points = [p for s in segments for p in (s.p0, s.p1)]
    try:
        hull = convex_hull(points)
    except DegenerateInput:
        return fallback_region(width, height, params)
    hb = bbox_of(hull).intersect(Rect(0, 0, width, height))
    crop = crop_from_hull_bbox(hb, width, height, params)
    if crop.is_empty:
        return fallback_region(width, height, params)
    return CourtRegion(
        hull=hull,
        hull_bbox=hb,
        crop=crop,
        interior=inner_polygon(hull, params.band_fraction, params.band_mode),
        band_area_fraction=params.band_fraction,
        fallback_used=False,
        width=width,
        height=height,
        segments=tuple(segments),
    )


def detect_lines(img: Raster, params: CourtParams = CourtParams()):
    gray = to_gray(img)
    edges = edgelines.canny(gray, params.canny_low, params.canny_high, params.canny_sigma)
    rng = None
    if params.hough_sample_fraction < 1.0:
        rng = RngStream(0, ["hough"]).generator()
    return edges, edgelines.hough_segments(edges, params.hough_params(img.width, img.height), rng)


def detect_court(img: Raster, params: CourtParams = CourtParams()) -> CourtRegion:
    if img.width < MIN_SIDE or img.height < MIN_SIDE:
        raise ImageTooSmall(f"court detection needs at least {MIN_SIDE}x{MIN_SIDE}, got {img.width}x{img.height}")
    _, segments = detect_lines(img, params)
    return region_from_segments(segments, img.width, img.height, params)


def region_to_json(region: CourtRegion, **extra) -> dict:
    rec = dict(extra)
    rec.update(
        hull=region.hull.as_lists(),
        hull_bbox=region.hull_bbox.as_list(),
        crop=region.crop.as_list(),
        interior=region.interior.as_lists(),
        band_area_fraction=region.band_area_fraction,
        fallback=region.fallback_used,
        width=region.width,
        height=region.height,
    )
    return rec


def region_from_json(rec: dict) -> CourtRegion:
    return CourtRegion(
        hull=Polygon(tuple(tuple(p) for p in rec["hull"])),
        hull_bbox=Rect(*rec["hull_bbox"]),
        crop=Rect(*rec["crop"]),
        interior=Polygon(tuple(tuple(p) for p in rec["interior"])),
        band_area_fraction=rec.get("band_area_fraction", 0.2),
        fallback_used=bool(rec["fallback"]),
        width=int(rec.get("width", 0)),
        height=int(rec.get("height", 0)),
    )


def save_regions(path, records: list[dict]) -> None:
    Path(path).write_text(json.dumps(records, indent=1) + "\n")


def load_regions(path) -> dict:
    """Map image_id -> CourtRegion from a regions file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"regions file not found: {path}")
    return {rec["image_id"]: region_from_json(rec) for rec in json.loads(path.read_text())}


def crop_area_report(dataset, regions: dict, roi_transforms: dict | None = None) -> list[dict]:
    """Mean cropped-area ratio per (court_label, split) group."""
    groups: dict[tuple[str, str], list] = {}
    for im in dataset.images:
        if im.id not in regions:
            raise MissingRegion(f"no court region for image {im.id} ({im.file_name})")
        crop = regions[im.id].crop
        ratio = crop.w * crop.h / (im.width * im.height)
        roi_ratio = None
        if roi_transforms is not None:
            t = roi_transforms[im.id]
            roi_ratio = t.roi_dims[0] * t.roi_dims[1] / (im.width * im.height)
        groups.setdefault((im.court_label or "unlabeled", im.split), []).append((ratio, roi_ratio))
    split_order = {"train": 0, "val": 1, "test": 2}
    rows = []
    for (label, split), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], split_order.get(kv[0][1], 9), kv[0][1])):
        mean = sum(v[0] for v in vals) / len(vals)
        row = {
            "court_label": label,
            "split": split,
            "n_images": len(vals),
            "mean_crop_area_ratio": mean,
            "mean_size_reduction": 1.0 - mean,
        }
        if roi_transforms is not None:
            row["mean_roi_area_ratio"] = sum(v[1] for v in vals) / len(vals)
        rows.append(row)
    return rows


def report_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def report_barchart(rows: list[dict], width: int = 40) -> str:
    lines = []
    for row in rows:
        r = row["mean_crop_area_ratio"]
        bar = "#" * int(round(r * width))
        lines.append(f"{row['court_label']:>12} {row['split']:<5} |{bar:<{width}}| {r:.3f}")
    return "\n".join(lines) + "\n"
