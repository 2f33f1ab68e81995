"""Location-constrained copy-paste augmentation.

Instances are harvested from the training images, restyled according to
their identity *before* compositing, then pasted back at positions where
that identity plausibly appears: players inside the court interior,
officials in the perimeter band, balls anywhere on the court.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import PurePosixPath
from typing import Callable, Iterable

import numpy as np

from .cocodata import (
    MIN_VISIBLE_AREA,
    Annotation,
    Dataset,
    ImageRecord,
    crop_annotations,
    rasterize_local,
    rasterize_window,
    tight_box,
    trace_contours,
)
from .court import CourtRegion
from .errors import MissingRegion, OutOfFrame, RegionTooSmall
from .geometry import Polygon, contains
from .identity import Identity, classify_dataset
from .raster import Raster, Rect, crop, resize_array, resize_nearest, scaled_dims
from .rng import RngStream, as_generator
from .styles import StyleConfig, stylize

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InstancePatch:
    pixels: Raster
    mask: np.ndarray
    identity: Identity
    source: tuple[int, int]
    category_id: int
    court_label: str | None = None

    @property
    def dims(self) -> tuple[int, int]:
        return self.pixels.width, self.pixels.height

    @property
    def anchor(self) -> tuple[float, float]:
        return self.pixels.width / 2, float(self.pixels.height)


@dataclass(frozen=True)
class PastePlan:
    patch: InstancePatch
    target_image_id: int
    position: tuple[float, float]
    scale: float = 1.0
    flipped: bool = False


@dataclass(frozen=True)
class CopyPasteConfig:
    duplication: int = 10
    paste_min: int = 1
    paste_max: int = 4
    scale_range: tuple[float, float] = (0.8, 1.25)
    flip_prob: float = 0.5
    min_visible_area: float = MIN_VISIBLE_AREA
    same_court_only: bool = False
    crop_to_court: bool = True
    max_rejections: int = 1000

    def __post_init__(self):
        if self.duplication < 1:
            raise ValueError("duplication must be >= 1")
        if not (0 <= self.paste_min <= self.paste_max):
            raise ValueError("need 0 <= paste_min <= paste_max")
        if not (0 < self.scale_range[0] <= self.scale_range[1]):
            raise ValueError("scale_range needs 0 < low <= high")
        if not (0 <= self.flip_prob <= 1):
            raise ValueError("flip_prob must be in [0, 1]")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")


def harvest(ds: Dataset, images, identities: dict, min_visible_area: float = MIN_VISIBLE_AREA) -> list[InstancePatch]:
    """One patch per annotation large enough to survive pasting.

    ``images`` maps image id to Raster. Patches are cropped to the rounded-out
    bbox and carry zeros off the mask.
    """
    patches = []
    for im in ds.images:
        if im.id not in images:
            continue
        img = images[im.id]
        for a in ds.annotations_for(im.id):
            p = patch_from_annotation(img, im, a, identities[a.id], min_visible_area)
            if p is not None:
                patches.append(p)
    return patches


def patch_from_annotation(img: Raster, im: ImageRecord, a: Annotation, identity, min_visible_area=MIN_VISIBLE_AREA):
    bx, by, bw, bh = a.bbox
    win = Rect.from_ltrb(math.floor(bx), math.floor(by), math.ceil(bx + bw), math.ceil(by + bh)).intersect(img.bounds)
    if win.is_empty:
        return None
    bits = rasterize_window(a.segmentation, win.x, win.y, win.w, win.h)
    if bits.sum() < min_visible_area:
        return None
    px = crop(img, win).data.copy()
    px[~bits] = 0
    return InstancePatch(Raster(px), bits, Identity(identity), (im.id, a.id), a.category_id, im.court_label)


def transform_patch(pixels: np.ndarray, mask: np.ndarray, scale: float, flipped: bool):
    """Flip/scale a patch (bilinear pixels, nearest mask) and re-tighten it to its mask."""
    if flipped:
        pixels, mask = pixels[:, ::-1], mask[:, ::-1]
    h, w = mask.shape
    if scale != 1.0:
        nw, nh = scaled_dims(w, h, scale)
        pixels = np.clip(np.floor(resize_array(pixels, nw, nh) + 0.5), 0, 255).astype(np.uint8)
        mask = resize_nearest(mask, nw, nh)
    box = tight_box(mask)
    if box is None:
        return None, None
    l, t, r, b = box
    return np.ascontiguousarray(pixels[t:b, l:r]), np.ascontiguousarray(mask[t:b, l:r])


def region_for(identity, region: CourtRegion) -> Polygon:
    return region.interior if Identity(identity) is Identity.PLAYER else region.hull


def placement_ok(identity, a, region: CourtRegion) -> bool:
    identity = Identity(identity)
    if identity is Identity.PLAYER:
        return contains(region.interior, a)
    if identity is Identity.PERIMETER:
        return contains(region.hull, a) and not contains(region.interior, a)
    return contains(region.hull, a)


def sample_position(rng, identity, region: CourtRegion, patch_dims, frame=None, avoid: Iterable[Rect] = (), max_tries: int = 1000):
    """Rejection-sample a bottom-centre anchor inside the identity's region.

    The anchor is snapped so that the patch's top-left corner is integral;
    the returned anchor is the snapped one and satisfies the containment
    rule exactly. With ``frame`` the whole patch must fit inside it, and it
    may not overlap any rect in ``avoid``.
    """
    g = as_generator(rng)
    w, h = patch_dims
    poly = region_for(identity, region)
    xs = [p[0] for p in poly.vertices]
    ys = [p[1] for p in poly.vertices]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    avoid = list(avoid)
    for _ in range(max_tries):
        px, py = g.uniform(x0, x1), g.uniform(y0, y1)
        tlx, tly = math.floor(px - w / 2 + 0.5), math.floor(py - h + 0.5)
        a = (tlx + w / 2, float(tly + h))
        if not placement_ok(identity, a, region):
            continue
        if frame is not None and (tlx < 0 or tly < 0 or tlx + w > frame[0] or tly + h > frame[1]):
            continue
        r = Rect(tlx, tly, w, h)
        if any(not r.intersect(o).is_empty for o in avoid):
            continue
        return a
    raise RegionTooSmall(f"no valid {Identity(identity).value} position for a {w}x{h} patch after {max_tries} tries")


def paste_into(img: Raster, anns: list[Annotation], plan: PastePlan, rng, new_id: int,
               style_cfg: StyleConfig = StyleConfig(), min_visible_area: float = MIN_VISIBLE_AREA):
    """Composite one restyled patch and rewrite the image's annotations.

    Returns (raster, annotations, new_annotation). Existing annotations lose
    the pixels the patch covers and are dropped when too little remains.
    """
    g = as_generator(rng)
    patch = plan.patch
    styled = stylize(patch.pixels, patch.mask, patch.identity, g, style_cfg)
    pix, mask = transform_patch(styled.data, patch.mask, plan.scale, plan.flipped)
    if mask is None:
        raise OutOfFrame("patch vanished after scaling")
    h, w = mask.shape
    tlx = math.floor(plan.position[0] - w / 2 + 0.5)
    tly = math.floor(plan.position[1] - h + 0.5)
    placed = Rect(tlx, tly, w, h).intersect(img.bounds)
    if placed.is_empty:
        raise OutOfFrame(f"pasted patch at ({tlx}, {tly}) misses the {img.width}x{img.height} frame")
    sub = mask[placed.y - tly:placed.bottom - tly, placed.x - tlx:placed.right - tlx]
    if not sub.any():
        raise OutOfFrame("visible part of the patch is empty")
    out = img.data.copy()
    region = out[placed.y:placed.bottom, placed.x:placed.right]
    region[sub] = pix[placed.y - tly:placed.bottom - tly, placed.x - tlx:placed.right - tlx][sub]

    kept = []
    for a in anns:
        kept_ann = occlude(a, placed, sub, img.width, img.height, min_visible_area)
        if kept_ann is not None:
            kept.append(kept_ann)
    box = tight_box(sub)
    l, t, r, b = box
    new = Annotation(
        id=new_id,
        image_id=plan.target_image_id,
        category_id=patch.category_id,
        bbox=(float(placed.x + l), float(placed.y + t), float(r - l), float(b - t)),
        segmentation=trace_contours(sub, placed.x, placed.y),
        area=float(sub.sum()),
        extra={"copy_paste": {"source_image_id": patch.source[0], "source_annotation_id": patch.source[1], "identity": patch.identity.value}},
    )
    kept.append(new)
    return Raster(out), kept, new


def occlude(a: Annotation, placed: Rect, sub: np.ndarray, width: int, height: int, min_visible_area: float):
    """``a`` minus the pasted mask; unchanged when they do not overlap, None when hidden."""
    win, local = rasterize_local(a.segmentation, width, height)
    if win.is_empty:
        return None
    ov = win.intersect(placed)
    if ov.is_empty:
        return a
    cover = sub[ov.y - placed.y:ov.bottom - placed.y, ov.x - placed.x:ov.right - placed.x]
    part = local[ov.y - win.y:ov.bottom - win.y, ov.x - win.x:ov.right - win.x]
    if not (part & cover).any():
        return a
    local = local.copy()
    local[ov.y - win.y:ov.bottom - win.y, ov.x - win.x:ov.right - win.x] = part & ~cover
    count = int(local.sum())
    if count < min_visible_area:
        return None
    l, t, r, b = tight_box(local)
    return replace(
        a,
        bbox=(float(win.x + l), float(win.y + t), float(r - l), float(b - t)),
        segmentation=trace_contours(local, win.x, win.y),
        area=float(count),
    )


def paste(img: Raster, ds: Dataset, plan: PastePlan, rng, style_cfg: StyleConfig = StyleConfig(),
          min_visible_area: float = MIN_VISIBLE_AREA) -> tuple[Raster, Dataset]:
    im = ds.image(plan.target_image_id)
    out, anns, _ = paste_into(img, ds.annotations_for(im.id), plan, rng, ds.next_annotation_id(), style_cfg, min_visible_area)
    return out, ds.replace_image(im, anns)


@dataclass
class ReplicaResult:
    record: ImageRecord
    annotations: list[Annotation]
    pasted: int
    warning: str | None = None


def replica_name(file_name: str, image_id: int, k: int) -> str:
    p = PurePosixPath(file_name)
    return f"{p.stem}_id{image_id}_r{k:02d}.png"


def make_replica(img: Raster, src: ImageRecord, anns: list[Annotation], region: CourtRegion, pool: list[InstancePatch],
                 rid: int, k: int, seed: int, cfg: CopyPasteConfig, style_cfg: StyleConfig) -> tuple[Raster, ReplicaResult]:
    g = RngStream(seed, ("replica", rid)).generator()
    extra = {"source_image_id": src.id, "replica": k}
    base_img, base_anns = img, [replace(a, image_id=rid) for a in anns]
    if cfg.crop_to_court:
        c = region.crop
        base_img = crop(img, c)
        base_anns = crop_annotations(base_anns, c, cfg.min_visible_area)
        region = region.translated(-c.x, -c.y)
        extra["court_crop"] = c.as_list()
    record = replace(src, id=rid, file_name=replica_name(src.file_name, src.id, k), width=base_img.width,
                     height=base_img.height, extra=dict(src.extra, **extra))
    n_paste = int(g.integers(cfg.paste_min, cfg.paste_max + 1)) if cfg.paste_max > 0 else 0
    if n_paste == 0 or not pool:
        return base_img, ReplicaResult(record, base_anns, 0)
    cur_img, cur_anns = base_img, list(base_anns)
    placed: list[Rect] = []
    next_local = max((a.id for a in base_anns), default=0) + 1
    try:
        for _ in range(n_paste):
            patch = pool[int(g.integers(len(pool)))]
            scale = float(g.uniform(*cfg.scale_range))
            flipped = bool(g.random() < cfg.flip_prob)
            _, m = transform_patch(patch.pixels.data, patch.mask, scale, flipped)
            if m is None:
                continue
            dims = (m.shape[1], m.shape[0])
            pos = sample_position(g, patch.identity, region, dims, frame=(cur_img.width, cur_img.height),
                                  avoid=placed, max_tries=cfg.max_rejections)
            plan = PastePlan(patch, rid, pos, scale, flipped)
            cur_img, cur_anns, new = paste_into(cur_img, cur_anns, plan, g, next_local, style_cfg, cfg.min_visible_area)
            next_local += 1
            placed.append(Rect(*(int(v) for v in new.bbox)))
    except RegionTooSmall as exc:
        msg = f"replica {rid} of image {src.id}: {exc}; emitted unaugmented"
        log.warning(msg)
        return base_img, ReplicaResult(record, base_anns, 0, msg)
    return cur_img, ReplicaResult(record, cur_anns, len(placed))


def augment_dataset(ds: Dataset, regions: dict, cfg: CopyPasteConfig, seed: int, load_image: Callable[[ImageRecord], Raster],
                    save_image: Callable[[ImageRecord, Raster], None] | None = None, style_cfg: StyleConfig = StyleConfig(),
                    map_fn=map) -> Dataset:
    """Duplicate every train/val image ``cfg.duplication`` times and copy-paste into each replica.

    Replica ids are assigned in (source id, replica index) order and every
    replica draws from its own stream keyed by (seed, replica id), so the
    result does not depend on how ``map_fn`` schedules the work. Test images
    are not part of the output.
    """
    sources = sorted((im for im in ds.images if im.split in ("train", "val")), key=lambda im: im.id)
    for im in sources:
        if im.id not in regions:
            raise MissingRegion(f"no court region for image {im.id} ({im.file_name})")
    identities = classify_dataset(Dataset(sources, [a for a in ds.annotations if a.image_id in {s.id for s in sources}],
                                          ds.categories), regions)
    by_image = ds.by_image()

    def harvest_one(im):
        img = load_image(im)
        patches = [p for a in by_image[im.id]
                   if (p := patch_from_annotation(img, im, a, identities[a.id], cfg.min_visible_area)) is not None]
        return patches

    all_patches = [p for chunk in map_fn(harvest_one, sources) for p in chunk]

    jobs = []
    rid = 1
    for im in sources:
        jobs.append((im, list(range(rid, rid + cfg.duplication))))
        rid += cfg.duplication

    def run_source(job):
        im, rids = job
        img = load_image(im)
        if cfg.same_court_only:
            pool = [p for p in all_patches if p.court_label == im.court_label]
        else:
            pool = all_patches
        results = []
        for k, r in enumerate(rids):
            out_img, res = make_replica(img, im, by_image[im.id], regions[im.id], pool, r, k, seed, cfg, style_cfg)
            if save_image is not None:
                save_image(res.record, out_img)
            results.append(res)
        return results

    images, annotations = [], []
    next_id = 1
    for results in map_fn(run_source, jobs):
        for res in results:
            images.append(res.record)
            for a in res.annotations:
                annotations.append(replace(a, id=next_id, image_id=res.record.id))
                next_id += 1
    return Dataset(images, annotations, list(ds.categories), dict(ds.extra))
