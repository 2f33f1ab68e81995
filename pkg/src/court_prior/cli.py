"""``court-prior`` command line.

Data goes to the ``--out`` / ``--out-dir`` paths only; logs go to stderr at
the level named by ``COURT_PRIOR_LOG`` (default ``INFO``). Exit status is 0
on success, 1 on a processing error and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path, PurePosixPath

import numpy as np

from . import cocodata, config, court, roi
from .cocodata import Dataset, ImageRecord
from .copypaste import augment_dataset
from .errors import CourtPriorError, DimensionMismatch, MissingRegion
from .identity import classify_dataset
from .onlineaug import AugmentTrace, run_online
from .preview import render_preview
from .raster import read_image, write_image
from .rng import RngStream

log = logging.getLogger("court_prior")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _setup_logging() -> None:
    level = os.environ.get("COURT_PRIOR_LOG", "INFO").upper()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("court_prior")
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level, logging.INFO))
    root.propagate = False


@contextmanager
def _mapper(threads: int):
    """Ordered map over a thread pool; plain ``map`` for one thread."""
    if threads <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield pool.map


def _cfg(args) -> config.PipelineConfig:
    overrides = dict(config.parse_override(s) for s in (args.set or []))
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads if args.threads == "auto" else int(args.threads)
    return config.load(args.config, overrides)


def _load_checked(images_dir: Path, im: ImageRecord):
    img = read_image(images_dir / im.file_name)
    if (img.width, img.height) != (im.width, im.height):
        raise DimensionMismatch(
            f"{images_dir / im.file_name}: image is {img.width}x{img.height} but the dataset says {im.width}x{im.height}")
    return img


def _regions_raw(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"regions file not found: {path}")
    return json.loads(path.read_text())


def _png_name(file_name: str) -> str:
    return str(PurePosixPath(file_name).with_suffix(".png"))


# --- stages ---------------------------------------------------------------

def stage_detect(images_dir: Path, ds: Dataset | None, cfg: config.PipelineConfig, mapper) -> list[dict]:
    params = cfg.court_params()
    if ds is not None:
        items = [(im.id, im.file_name, im) for im in sorted(ds.images, key=lambda im: im.id)]
    else:
        if not images_dir.is_dir():
            raise FileNotFoundError(f"image directory not found: {images_dir}")
        names = sorted(p.name for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        items = [(n, n, None) for n in names]

    def one(item):
        image_id, file_name, im = item
        img = _load_checked(images_dir, im) if im is not None else read_image(images_dir / file_name)
        region = court.detect_court(img, params)
        if region.fallback_used:
            log.warning("%s: no usable court lines, static margins used", images_dir / file_name)
        return court.region_to_json(region, image_id=image_id, file_name=file_name)

    return list(mapper(one, items))


def stage_classify(ds: Dataset, regions: dict) -> dict[str, str]:
    ids = classify_dataset(ds, regions)
    return {str(a.id): ids[a.id].value for a in sorted(ds.annotations, key=lambda a: a.id)}


def stage_augment(ds: Dataset, images_dir: Path, regions: dict, out_dir: Path, cfg: config.PipelineConfig, mapper) -> Dataset:
    img_out = out_dir / "images"
    img_out.mkdir(parents=True, exist_ok=True)
    out = augment_dataset(
        ds, regions, cfg.copypaste_config(), cfg.seed,
        load_image=lambda im: _load_checked(images_dir, im),
        save_image=lambda rec, img: write_image(img_out / rec.file_name, img),
        style_cfg=cfg.style_config(), map_fn=mapper,
    )
    cocodata.save(out_dir / "annotations.json", out)
    log.info("wrote %d replicas with %d annotations to %s", len(out.images), len(out.annotations), out_dir)
    return out


def stage_online(ds: Dataset, images_dir: Path, out_dir: Path, cfg: config.PipelineConfig, epoch: int, mapper,
                 replay: dict | None = None) -> Dataset:
    arr_dir = out_dir / "arrays"
    arr_dir.mkdir(parents=True, exist_ok=True)
    ocfg = cfg.online_config()
    by_image = ds.by_image()
    images = sorted(ds.images, key=lambda im: im.id)

    def one(im):
        img = _load_checked(images_dir, im)
        trace = None
        if replay is not None:
            if im.id not in replay:
                raise MissingRegion(f"no trace recorded for image {im.id} ({im.file_name})")
            trace = replay[im.id]
        rng = RngStream(cfg.seed, ("online", epoch, im.id)).generator()
        arr, anns, tr = run_online((img, by_image[im.id]), rng, ocfg, trace)
        name = str(PurePosixPath(im.file_name).with_suffix(".npy"))
        np.save(arr_dir / name, arr)
        rec = replace(im, file_name=name, width=arr.shape[1], height=arr.shape[0])
        return rec, anns, replace(tr, sample_id=im.id)

    records, annotations, traces = [], [], []
    for rec, anns, tr in mapper(one, images):
        records.append(rec)
        annotations.extend(anns)
        traces.append(tr)
    out = Dataset(records, annotations, list(ds.categories), dict(ds.extra))
    cocodata.save(out_dir / "annotations.json", out)
    (out_dir / "traces.jsonl").write_text("".join(json.dumps(t.to_json()) + "\n" for t in traces))
    return out


def stage_roi(images_dir: Path, region_records: list[dict], out_dir: Path, cfg: config.PipelineConfig, mapper) -> list[dict]:
    img_out = out_dir / "images"
    img_out.mkdir(parents=True, exist_ok=True)
    max_side = cfg["roi.max_side"]

    def one(rec):
        img = read_image(images_dir / rec["file_name"])
        cut, t = roi.make_roi(img, court.region_from_json(rec), max_side)
        name = _png_name(rec["file_name"])
        write_image(img_out / name, cut)
        return t.to_json(image_id=rec["image_id"], file_name=name)

    records = list(mapper(one, region_records))
    roi.save_transforms(out_dir / "transforms.json", records)
    return records


def stage_stats(ds: Dataset, regions: dict, transforms: dict | None, out: Path, barchart: Path | None) -> None:
    rows = court.crop_area_report(ds, regions, transforms)
    out.write_text(court.report_csv(rows))
    if barchart is not None:
        barchart.write_text(court.report_barchart(rows))


# --- subcommands ----------------------------------------------------------

def cmd_detect_court(args) -> None:
    cfg = _cfg(args)
    ds = cocodata.load(args.dataset) if args.dataset else None
    with _mapper(cfg.threads) as m:
        records = stage_detect(Path(args.images), ds, cfg, m)
    court.save_regions(args.out, records)


def cmd_classify(args) -> None:
    ds = cocodata.load(args.dataset)
    Path(args.out).write_text(json.dumps(stage_classify(ds, court.load_regions(args.regions)), indent=1) + "\n")


def cmd_augment(args) -> None:
    cfg = _cfg(args)
    ds = cocodata.load(args.dataset)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with _mapper(cfg.threads) as m:
        if args.online:
            replay = None
            if args.replay:
                p = Path(args.replay)
                if not p.exists():
                    raise FileNotFoundError(f"trace file not found: {p}")
                traces = [AugmentTrace.from_json(json.loads(line)) for line in p.read_text().splitlines() if line.strip()]
                replay = {t.sample_id: t for t in traces}
            stage_online(ds, Path(args.images), out_dir, cfg, args.epoch, m, replay)
        else:
            if not args.regions:
                raise _Usage("augment needs --regions unless --online is given")
            stage_augment(ds, Path(args.images), court.load_regions(args.regions), out_dir, cfg, m)


def cmd_stats(args) -> None:
    ds = cocodata.load(args.dataset)
    transforms = roi.load_transforms(args.transforms) if args.transforms else None
    stage_stats(ds, court.load_regions(args.regions), transforms, Path(args.out),
                Path(args.barchart) if args.barchart else None)


def cmd_roi(args) -> None:
    cfg = _cfg(args)
    with _mapper(cfg.threads) as m:
        stage_roi(Path(args.images), _regions_raw(args.regions), Path(args.out_dir), cfg, m)


def cmd_map_back(args) -> None:
    transforms = roi.load_transforms(args.transforms)
    out = []
    for det in roi.read_detections(args.detections):
        t = transforms.get(det.get("image_id"))
        if t is None:
            raise MissingRegion(f"{args.detections}: no transform for image {det.get('image_id')!r}")
        out.append(roi.map_back(det, t))
    roi.write_detections(args.out, out)


def cmd_preview(args) -> None:
    cfg = _cfg(args)
    img = read_image(args.image)
    records = _regions_raw(args.regions)
    name = Path(args.image).name
    rec = next((r for r in records if PurePosixPath(str(r.get("file_name", ""))).name == name), None)
    if rec is None:
        raise MissingRegion(f"{args.regions}: no region recorded for {name}")
    region = court.region_from_json(rec)
    segments = None
    if args.lines or args.edges:
        edges, segments = court.detect_lines(img, cfg.court_params())
        if args.edges:
            write_image(args.edges, edges.to_raster())
    write_image(args.out, render_preview(img, region, segments if args.lines else None))


def cmd_pipeline(args) -> None:
    cfg = _cfg(args)
    dataset = args.dataset or cfg["paths.dataset"]
    images = args.images or cfg["paths.images"]
    out = args.out_dir or cfg["paths.out_dir"]
    missing = [n for n, v in (("--dataset", dataset), ("--images", images), ("--out-dir", out)) if not v]
    if missing:
        raise _Usage(f"pipeline needs {', '.join(missing)} (flag or paths.* config key)")
    ds = cocodata.load(dataset)
    images_dir, out_dir = Path(images), Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with _mapper(cfg.threads) as m:
        region_records = stage_detect(images_dir, ds, cfg, m)
        court.save_regions(out_dir / "regions.json", region_records)
        regions = court.load_regions(out_dir / "regions.json")
        (out_dir / "identities.json").write_text(json.dumps(stage_classify(ds, regions), indent=1) + "\n")
        stage_augment(ds, images_dir, regions, out_dir / "augmented", cfg, m)
        stage_roi(images_dir, region_records, out_dir / "roi", cfg, m)
    transforms = roi.load_transforms(out_dir / "roi" / "transforms.json")
    stage_stats(ds, regions, transforms, out_dir / "report.csv", None)


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="court-prior", description="Court-aware copy-paste augmentation and ROI tools.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
        sp.add_argument("--threads", help="worker threads or 'auto'")
        if seed:
            sp.add_argument("--seed", type=int, help="root seed")

    sp = sub.add_parser("detect-court", help="detect court regions for a directory of frames")
    sp.add_argument("--images", required=True)
    sp.add_argument("--dataset", help="COCO file; regions are then keyed by image id")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_detect_court)

    sp = sub.add_parser("classify", help="assign player/perimeter/ball identities")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--regions", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("augment", help="offline copy-paste replicas, or one online epoch with --online")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--images", required=True)
    sp.add_argument("--regions")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--online", action="store_true", help="run the online chain instead of copy-paste")
    sp.add_argument("--epoch", type=int, default=0, help="epoch index for --online")
    sp.add_argument("--replay", help="traces.jsonl to replay with --online")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("stats", help="crop-area report per court and split")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--regions", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--transforms", help="ROI transforms.json; adds the ROI area column")
    sp.add_argument("--barchart", help="also write a text bar chart here")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("roi", help="write reduced-size inference crops")
    sp.add_argument("--images", required=True)
    sp.add_argument("--regions", required=True)
    sp.add_argument("--out-dir", required=True)
    common(sp)
    sp.set_defaults(func=cmd_roi)

    sp = sub.add_parser("map-back", help="map ROI detections to original pixels")
    sp.add_argument("--detections", required=True)
    sp.add_argument("--transforms", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_map_back)

    sp = sub.add_parser("preview", help="draw the detected region over a frame")
    sp.add_argument("--image", required=True)
    sp.add_argument("--regions", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--edges", help="also write the Canny edge map here")
    sp.add_argument("--lines", action="store_true", help="overlay the Hough segments")
    common(sp)
    sp.set_defaults(func=cmd_preview)

    sp = sub.add_parser("pipeline", help="detect-court, classify, augment and roi in one run")
    sp.add_argument("--dataset")
    sp.add_argument("--images")
    sp.add_argument("--out-dir")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        log.error("%s", exc)
        return 2
    except (CourtPriorError, OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
