"""COCO instance-segmentation data model and annotation-geometry transforms.

Every transform re-derives ``bbox`` and ``area`` from the rasterised
segmentation, so annotations stay tight to their masks no matter how the
polygons were moved.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyMask, SchemaError
from .geometry import clip_to_rect, flat_to_points, points_to_flat, signed_area
from .raster import Rect

MIN_VISIBLE_AREA = 16.0
SPLITS = ("train", "val", "test")


@dataclass
class Category:
    id: int
    name: str
    extra: dict = field(default_factory=dict)


@dataclass
class ImageRecord:
    id: int
    file_name: str
    width: int
    height: int
    court_label: str | None = None
    split: str = "train"
    extra: dict = field(default_factory=dict)


@dataclass
class Annotation:
    id: int
    image_id: int
    category_id: int
    bbox: tuple[float, float, float, float]
    segmentation: list[list[float]]
    area: float
    iscrowd: int = 0
    extra: dict = field(default_factory=dict)


@dataclass
class Dataset:
    images: list[ImageRecord] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)
    categories: list[Category] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def image(self, image_id: int) -> ImageRecord:
        for im in self.images:
            if im.id == image_id:
                return im
        raise KeyError(f"no image with id {image_id}")

    def annotations_for(self, image_id: int) -> list[Annotation]:
        return [a for a in self.annotations if a.image_id == image_id]

    def by_image(self) -> dict[int, list[Annotation]]:
        out: dict[int, list[Annotation]] = {im.id: [] for im in self.images}
        for a in self.annotations:
            out[a.image_id].append(a)
        return out

    def category_names(self) -> dict[int, str]:
        return {c.id: c.name for c in self.categories}

    def next_annotation_id(self) -> int:
        return max((a.id for a in self.annotations), default=0) + 1

    def replace_image(self, record: ImageRecord, anns: list[Annotation]) -> "Dataset":
        """Copy of the dataset with one image's record and annotations swapped out."""
        images = [record if im.id == record.id else im for im in self.images]
        kept = [a for a in self.annotations if a.image_id != record.id]
        return Dataset(images, sorted(kept + list(anns), key=lambda a: a.id), list(self.categories), dict(self.extra))

    def validate(self) -> None:
        ids = set()
        for i, im in enumerate(self.images):
            if im.id in ids:
                raise SchemaError(f"images[{i}].id", f"duplicate image id {im.id}")
            ids.add(im.id)
        cats = {c.id for c in self.categories}
        seen = set()
        for i, a in enumerate(self.annotations):
            if a.id in seen:
                raise SchemaError(f"annotations[{i}].id", f"duplicate annotation id {a.id}")
            seen.add(a.id)
            if a.image_id not in ids:
                raise SchemaError(f"annotations[{i}].image_id", f"annotation {a.id} references missing image {a.image_id}")
            if a.category_id not in cats:
                raise SchemaError(f"annotations[{i}].category_id", f"annotation {a.id} references missing category {a.category_id}")


# --- JSON -----------------------------------------------------------------

def _take(obj: dict, key: str, path: str, kind):
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        if isinstance(val, float) and val.is_integer():
            return int(val)
        raise SchemaError(f"{path}.{key}", f"expected integer, got {val!r}")
    if kind is str and not isinstance(val, str):
        raise SchemaError(f"{path}.{key}", f"expected string, got {val!r}")
    if kind is float and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise SchemaError(f"{path}.{key}", f"expected number, got {val!r}")
    if kind is list and not isinstance(val, list):
        raise SchemaError(f"{path}.{key}", f"expected array, got {type(val).__name__}")
    return val


def _parse_image(obj, path) -> ImageRecord:
    extra = {k: v for k, v in obj.items() if k not in ("id", "file_name", "width", "height", "court_label", "split")}
    rec = ImageRecord(
        id=_take(obj, "id", path, int),
        file_name=_take(obj, "file_name", path, str),
        width=_take(obj, "width", path, int),
        height=_take(obj, "height", path, int),
        court_label=obj.get("court_label"),
        split=obj.get("split", "train"),
        extra=extra,
    )
    if rec.width <= 0 or rec.height <= 0:
        raise SchemaError(path, f"image {rec.id} has non-positive size {rec.width}x{rec.height}")
    if rec.split not in SPLITS:
        raise SchemaError(f"{path}.split", f"split must be one of {SPLITS}, got {rec.split!r}")
    return rec


def _parse_annotation(obj, path) -> Annotation:
    known = ("id", "image_id", "category_id", "bbox", "segmentation", "area", "iscrowd")
    extra = {k: v for k, v in obj.items() if k not in known}
    ann_id = _take(obj, "id", path, int)
    if isinstance(obj.get("segmentation"), dict):
        raise SchemaError(f"{path}.segmentation", f"annotation {ann_id}: RLE segmentation is not supported")
    seg = _take(obj, "segmentation", path, list)
    for j, poly in enumerate(seg):
        if not isinstance(poly, list) or len(poly) < 6 or len(poly) % 2 or not all(isinstance(v, (int, float)) for v in poly):
            raise SchemaError(f"{path}.segmentation[{j}]", f"annotation {ann_id}: polygon needs an even number >= 6 of coordinates")
    if obj.get("iscrowd", 0):
        raise SchemaError(f"{path}.iscrowd", f"annotation {ann_id}: crowd annotations are not supported")
    bbox = _take(obj, "bbox", path, list)
    if len(bbox) != 4:
        raise SchemaError(f"{path}.bbox", f"annotation {ann_id}: bbox needs 4 numbers")
    return Annotation(
        id=ann_id,
        image_id=_take(obj, "image_id", path, int),
        category_id=_take(obj, "category_id", path, int),
        bbox=tuple(float(v) for v in bbox),
        segmentation=[[float(v) for v in poly] for poly in seg],
        area=float(_take(obj, "area", path, float)),
        iscrowd=0,
        extra=extra,
    )


def parse(blob: bytes | str) -> Dataset:
    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    for key in ("images", "annotations", "categories"):
        if not isinstance(doc.get(key), list):
            raise SchemaError(f"$.{key}", "missing required array")
    cats = []
    for i, c in enumerate(doc["categories"]):
        path = f"$.categories[{i}]"
        cats.append(Category(_take(c, "id", path, int), _take(c, "name", path, str), {k: v for k, v in c.items() if k not in ("id", "name")}))
    ds = Dataset(
        images=[_parse_image(o, f"$.images[{i}]") for i, o in enumerate(doc["images"])],
        annotations=[_parse_annotation(o, f"$.annotations[{i}]") for i, o in enumerate(doc["annotations"])],
        categories=cats,
        extra={k: v for k, v in doc.items() if k not in ("images", "annotations", "categories")},
    )
    try:
        ds.validate()
    except SchemaError as exc:
        raise SchemaError("$." + exc.path, str(exc).split(": ", 1)[1]) from None
    return ds


def _image_json(im: ImageRecord) -> dict:
    out = {"id": im.id, "file_name": im.file_name, "width": im.width, "height": im.height, "split": im.split}
    if im.court_label is not None:
        out["court_label"] = im.court_label
    out.update(im.extra)
    return out


def _annotation_json(a: Annotation) -> dict:
    out = {
        "id": a.id,
        "image_id": a.image_id,
        "category_id": a.category_id,
        "bbox": list(a.bbox),
        "segmentation": [list(p) for p in a.segmentation],
        "area": a.area,
        "iscrowd": a.iscrowd,
    }
    out.update(a.extra)
    return out


def to_json(ds: Dataset) -> dict:
    doc = dict(ds.extra)
    doc["images"] = [_image_json(im) for im in ds.images]
    doc["annotations"] = [_annotation_json(a) for a in ds.annotations]
    doc["categories"] = [dict({"id": c.id, "name": c.name}, **c.extra) for c in ds.categories]
    return doc


def serialize(ds: Dataset) -> bytes:
    return (json.dumps(to_json(ds)) + "\n").encode()


def load(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    try:
        return parse(path.read_bytes())
    except SchemaError as exc:
        raise SchemaError(f"{path}:{exc.path}", str(exc).split(": ", 1)[1]) from None


def save(path, ds: Dataset) -> None:
    Path(path).write_bytes(serialize(ds))


# --- masks ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mask:
    bits: np.ndarray  # (H, W) bool

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        return isinstance(other, Mask) and self.bits.shape == other.bits.shape and np.array_equal(self.bits, other.bits)


def rasterize_window(segmentation: Sequence[Sequence[float]], x0: int, y0: int, w: int, h: int) -> np.ndarray:
    """Even-odd fill of all rings, sampled at pixel centres, inside one window.

    Pixel (x, y) is set when (x + 0.5, y + 0.5) lies inside; edges are
    half-open so that a square [10, 20) covers exactly ten columns.
    """
    toggles = np.zeros((h, w + 1), dtype=np.int32)
    for flat in segmentation:
        pts = np.asarray(flat, dtype=np.float64).reshape(-1, 2)
        a = pts
        b = np.roll(pts, -1, axis=0)
        ya, yb = a[:, 1], b[:, 1]
        lo, hi = np.minimum(ya, yb), np.maximum(ya, yb)
        # rows whose centre yc satisfies lo <= yc < hi
        r0 = np.maximum(np.ceil(lo - 0.5 - y0), 0).astype(np.int64)
        r1 = np.minimum(np.ceil(hi - 0.5 - y0), h).astype(np.int64)
        span = np.maximum(r1 - r0, 0)
        total = int(span.sum())
        if total == 0:
            continue
        edge = np.repeat(np.arange(len(a)), span)
        offs = np.arange(total) - np.repeat(np.cumsum(span) - span, span)
        rows = r0[edge] + offs
        yc = rows + y0 + 0.5
        xa, xb = a[edge, 0], b[edge, 0]
        y_a, y_b = ya[edge], yb[edge]
        xc = xa + (yc - y_a) * (xb - xa) / (y_b - y_a)
        cols = np.clip(np.ceil(xc - 0.5 - x0), 0, w).astype(np.int64)
        toggles += np.bincount(rows * (w + 1) + cols, minlength=h * (w + 1)).reshape(h, w + 1).astype(np.int32)
    return (np.cumsum(toggles, axis=1)[:, :w] & 1).astype(bool)


def segmentation_bounds(segmentation, width: int, height: int) -> Rect:
    xs = [v for p in segmentation for v in p[0::2]]
    ys = [v for p in segmentation for v in p[1::2]]
    if not xs:
        return Rect(0, 0, 0, 0)
    r = Rect.from_ltrb(math.floor(min(xs)), math.floor(min(ys)), math.ceil(max(xs)) + 1, math.ceil(max(ys)) + 1)
    return r.intersect(Rect(0, 0, width, height))


def rasterize_local(segmentation, width: int, height: int) -> tuple[Rect, np.ndarray]:
    """Rasterise into the segmentation's own bounding window (clipped to the frame)."""
    win = segmentation_bounds(segmentation, width, height)
    if win.is_empty:
        return win, np.zeros((0, 0), dtype=bool)
    return win, rasterize_window(segmentation, win.x, win.y, win.w, win.h)


def rasterize(ann: Annotation | Sequence, width: int, height: int) -> Mask:
    seg = ann.segmentation if isinstance(ann, Annotation) else ann
    bits = np.zeros((height, width), dtype=bool)
    win, local = rasterize_local(seg, width, height)
    if not win.is_empty:
        bits[win.y:win.bottom, win.x:win.right] = local
    return Mask(bits)


# direction index -> (dx, dy); y grows downward
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def trace_contours(bits: np.ndarray, x0: int = 0, y0: int = 0) -> list[list[float]]:
    """Boundary rings of a binary mask along pixel edges ("crack" contours).

    Every edge between a set and an unset pixel belongs to exactly one ring,
    so even-odd rasterisation of the rings reproduces the mask exactly,
    holes included. At diagonal-only contacts the tracer turns so that the
    two pixels end up in separate rings.
    """
    b = np.pad(np.asarray(bits, dtype=bool), 1)
    inner = b[1:-1, 1:-1]
    out_edges: dict[tuple[int, int], list[int]] = {}
    # (neighbour slice, start-vertex offset, direction)
    sides = (
        (b[:-2, 1:-1], (0, 0), 0),   # top edge, moving +x
        (b[1:-1, 2:], (1, 0), 1),    # right edge, moving +y
        (b[2:, 1:-1], (1, 1), 2),    # bottom edge, moving -x
        (b[1:-1, :-2], (0, 1), 3),   # left edge, moving -y
    )
    for neigh, (ox, oy), d in sides:
        ys, xs = np.nonzero(inner & ~neigh)
        for x, y in zip((xs + ox).tolist(), (ys + oy).tolist()):
            out_edges.setdefault((x, y), []).append(d)
    rings = []
    for start in sorted(out_edges):
        while out_edges.get(start):
            d = out_edges[start].pop(0)
            if not out_edges[start]:
                del out_edges[start]
            ring = [start]
            x, y = start
            while True:
                x, y = x + _DIRS[d][0], y + _DIRS[d][1]
                if (x, y) == start and (x, y) not in out_edges:
                    break
                options = out_edges.get((x, y))
                if not options:
                    break
                right = (d + 1) % 4
                nd = right if right in options else (d if d in options else options[0])
                options.remove(nd)
                if not options:
                    del out_edges[(x, y)]
                if nd != d:
                    ring.append((x, y))
                d = nd
            if len(ring) >= 3:
                rings.append(points_to_flat((px + x0, py + y0) for px, py in ring))
    return rings


def mask_to_polygons(mask: Mask | np.ndarray, x0: int = 0, y0: int = 0) -> list[list[float]]:
    bits = mask.bits if isinstance(mask, Mask) else mask
    if not bits.any():
        raise EmptyMask("cannot trace an empty mask")
    return trace_contours(bits, x0, y0)


# --- annotation geometry ---------------------------------------------------

def tight_box(bits: np.ndarray) -> tuple[int, int, int, int] | None:
    rows = np.nonzero(bits.any(axis=1))[0]
    if len(rows) == 0:
        return None
    cols = np.nonzero(bits.any(axis=0))[0]
    return int(cols[0]), int(rows[0]), int(cols[-1] + 1), int(rows[-1] + 1)


def retighten(ann: Annotation, width: int, height: int) -> Annotation | None:
    """Annotation with bbox/area re-derived from its rasterised mask; None if empty."""
    win, local = rasterize_local(ann.segmentation, width, height)
    box = None if win.is_empty else tight_box(local)
    if box is None:
        return None
    l, t, r, b = box
    return replace(
        ann,
        bbox=(float(win.x + l), float(win.y + t), float(r - l), float(b - t)),
        area=float(local.sum()),
    )


def annotation_violations(ann: Annotation, width: int, height: int) -> list[str]:
    """Violations of the bbox-tightness, bounds and area-consistency rules."""
    problems = []
    for poly in ann.segmentation:
        xs, ys = poly[0::2], poly[1::2]
        if min(xs) < 0 or max(xs) > width or min(ys) < 0 or max(ys) > height:
            problems.append(f"annotation {ann.id}: vertex outside [0,{width}]x[0,{height}]")
            break
    win, local = rasterize_local(ann.segmentation, width, height)
    box = None if win.is_empty else tight_box(local)
    if box is None:
        problems.append(f"annotation {ann.id}: empty mask")
        return problems
    l, t, r, b = box[0] + win.x, box[1] + win.y, box[2] + win.x, box[3] + win.y
    bx, by, bw, bh = ann.bbox
    if max(abs(bx - l), abs(by - t), abs(bx + bw - r), abs(by + bh - b)) > 1.0:
        problems.append(f"annotation {ann.id}: bbox {ann.bbox} not tight to mask box {(l, t, r - l, b - t)}")
    count = float(local.sum())
    if abs(ann.area - count) > max(0.02 * count, 5.0):
        problems.append(f"annotation {ann.id}: area {ann.area} vs mask count {count}")
    return problems


def _map_rings(segmentation, fn) -> list[list[float]]:
    return [points_to_flat(fn(x, y) for x, y in flat_to_points(p)) for p in segmentation]


def crop_annotations(anns: Iterable[Annotation], r: Rect, min_visible_area: float = MIN_VISIBLE_AREA) -> list[Annotation]:
    """Annotations translated into crop coordinates and clipped to the crop."""
    out = []
    for a in anns:
        rings = []
        for p in _map_rings(a.segmentation, lambda x, y: (x - r.x, y - r.y)):
            clipped = clip_to_rect(flat_to_points(p), 0.0, 0.0, float(r.w), float(r.h))
            if len(clipped) >= 3 and signed_area(clipped) != 0:
                rings.append(points_to_flat(clipped))
        if not rings:
            continue
        t = retighten(replace(a, segmentation=rings), r.w, r.h)
        if t is not None and t.area >= min_visible_area:
            out.append(t)
    return out


def hflip_annotations(anns: Iterable[Annotation], width: int, height: int) -> list[Annotation]:
    out = []
    for a in anns:
        t = retighten(replace(a, segmentation=_map_rings(a.segmentation, lambda x, y: (width - x, y))), width, height)
        if t is not None:
            out.append(t)
    return out


def resize_annotations(anns: Iterable[Annotation], sx: float, sy: float, new_width: int, new_height: int) -> list[Annotation]:
    out = []
    for a in anns:
        seg = _map_rings(a.segmentation, lambda x, y: (min(max(x * sx, 0.0), new_width), min(max(y * sy, 0.0), new_height)))
        t = retighten(replace(a, segmentation=seg), new_width, new_height)
        if t is not None:
            out.append(t)
    return out


def transform_crop(ds: Dataset, image_id: int, r: Rect, min_visible_area: float = MIN_VISIBLE_AREA) -> Dataset:
    im = ds.image(image_id)
    r = r.intersect(Rect(0, 0, im.width, im.height))
    anns = crop_annotations(ds.annotations_for(image_id), r, min_visible_area)
    return ds.replace_image(replace(im, width=r.w, height=r.h), anns)


def transform_hflip(ds: Dataset, image_id: int) -> Dataset:
    im = ds.image(image_id)
    return ds.replace_image(im, hflip_annotations(ds.annotations_for(image_id), im.width, im.height))


def transform_resize(ds: Dataset, image_id: int, sx: float, sy: float) -> Dataset:
    im = ds.image(image_id)
    nw, nh = max(1, int(round(im.width * sx))), max(1, int(round(im.height * sy)))
    anns = resize_annotations(ds.annotations_for(image_id), sx, sy, nw, nh)
    return ds.replace_image(replace(im, width=nw, height=nh), anns)


def deepcopy_dataset(ds: Dataset) -> Dataset:
    return copy.deepcopy(ds)
