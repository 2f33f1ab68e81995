"""Synthetic broadcast-style court renders with COCO annotations.

Used for fixtures, the acceptance corpus and desk-scale pipeline runs. All
geometry is drawn with the same rasteriser the annotations use, so masks
and pixels agree exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cocodata import Annotation, Category, Dataset, ImageRecord, rasterize_window, retighten, save
from .geometry import points_to_flat
from .raster import Raster, write_image

CATEGORIES = [Category(1, "human"), Category(2, "ball")]

ARENAS = {
    "court_A": {"floor": (176, 124, 78), "apron": (38, 44, 60), "line": (245, 245, 240)},
    "court_B": {"floor": (196, 150, 96), "apron": (70, 30, 36), "line": (250, 250, 250)},
    "court_C": {"floor": (150, 100, 62), "apron": (24, 60, 40), "line": (235, 235, 225)},
    "court_D": {"floor": (205, 170, 120), "apron": (40, 40, 40), "line": (255, 255, 255)},
    "court_E": {"floor": (120, 140, 170), "apron": (20, 28, 70), "line": (240, 240, 240)},
}


@dataclass(frozen=True)
class CourtSpec:
    """Court rectangle in normalised frame coordinates (0..1), rotated about its centre."""

    cx: float
    cy: float
    w: float
    h: float
    angle: float = 0.0  # degrees
    arena: str = "court_A"

    def corners(self, width: int, height: int) -> list[tuple[float, float]]:
        t = math.radians(self.angle)
        c, s = math.cos(t), math.sin(t)
        hw, hh = self.w * width / 2, self.h * height / 2
        cx, cy = self.cx * width, self.cy * height
        return [(cx + x * c - y * s, cy + x * s + y * c) for x, y in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))]

    def bbox(self, width: int, height: int) -> tuple[int, int, int, int]:
        """Ground-truth (left, top, right, bottom) of the outer court outline."""
        pts = self.corners(width, height)
        return (math.floor(min(p[0] for p in pts)), math.floor(min(p[1] for p in pts)),
                math.ceil(max(p[0] for p in pts)), math.ceil(max(p[1] for p in pts)))


def random_court(rng: np.random.Generator, max_angle: float = 5.0) -> CourtSpec:
    w = rng.uniform(0.62, 0.82)
    h = rng.uniform(0.55, 0.72)
    cx = rng.uniform(0.5 - (0.9 - w) / 2, 0.5 + (0.9 - w) / 2)
    cy = rng.uniform(0.5 - (0.86 - h) / 2 + 0.03, 0.5 + (0.86 - h) / 2 + 0.03)
    return CourtSpec(cx, cy, w, h, float(rng.uniform(-max_angle, max_angle)), str(rng.choice(sorted(ARENAS))))


def _fill(canvas: np.ndarray, ring, color) -> np.ndarray:
    h, w = canvas.shape[:2]
    xs, ys = ring[0::2], ring[1::2]
    x0, y0 = max(0, math.floor(min(xs))), max(0, math.floor(min(ys)))
    x1, y1 = min(w, math.ceil(max(xs)) + 1), min(h, math.ceil(max(ys)) + 1)
    if x1 <= x0 or y1 <= y0:
        return np.zeros((0, 0), dtype=bool)
    bits = rasterize_window([ring], x0, y0, x1 - x0, y1 - y0)
    canvas[y0:y1, x0:x1][bits] = color
    return bits


def _thick_line(p, q, width):
    dx, dy = q[0] - p[0], q[1] - p[1]
    L = math.hypot(dx, dy)
    nx, ny = -dy / L * width / 2, dx / L * width / 2
    return points_to_flat([(p[0] + nx, p[1] + ny), (q[0] + nx, q[1] + ny), (q[0] - nx, q[1] - ny), (p[0] - nx, p[1] - ny)])


def _inset(corners, d):
    cx = sum(p[0] for p in corners) / 4
    cy = sum(p[1] for p in corners) / 4
    out = []
    for x, y in corners:
        vx, vy = x - cx, y - cy
        n = math.hypot(vx, vy)
        out.append((x - vx / n * d * math.sqrt(2), y - vy / n * d * math.sqrt(2)))
    return out


def render_court(width: int, height: int, spec: CourtSpec, noise_seed: int | None = 0) -> np.ndarray:
    """(H, W, 3) uint8 court render: apron, floor, outline and a few interior lines."""
    pal = ARENAS[spec.arena]
    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:] = pal["apron"]
    corners = spec.corners(width, height)
    _fill(canvas, points_to_flat(corners), pal["floor"])
    lw = max(3.0, height / 180)
    # outline drawn inward so the outer edge coincides with the court boundary
    inner = _inset(corners, lw / 2)
    for i in range(4):
        _fill(canvas, _thick_line(inner[i], inner[(i + 1) % 4], lw), pal["line"])
    top_mid = ((inner[0][0] + inner[1][0]) / 2, (inner[0][1] + inner[1][1]) / 2)
    bot_mid = ((inner[2][0] + inner[3][0]) / 2, (inner[2][1] + inner[3][1]) / 2)
    _fill(canvas, _thick_line(top_mid, bot_mid, lw), pal["line"])
    cx, cy = (top_mid[0] + bot_mid[0]) / 2, (top_mid[1] + bot_mid[1]) / 2
    r = 0.09 * spec.h * height
    circle = [(cx + r * math.cos(a), cy + r * math.sin(a)) for a in np.linspace(0, 2 * math.pi, 48, endpoint=False)]
    inner_r = [(cx + (r - lw) * math.cos(a), cy + (r - lw) * math.sin(a)) for a in np.linspace(0, 2 * math.pi, 48, endpoint=False)]
    ring_bits_outer = points_to_flat(circle)
    ring_bits_inner = points_to_flat(inner_r)
    x0, y0 = max(0, math.floor(cx - r - 1)), max(0, math.floor(cy - r - 1))
    x1, y1 = min(width, math.ceil(cx + r + 2)), min(height, math.ceil(cy + r + 2))
    if x1 > x0 and y1 > y0:
        bits = rasterize_window([ring_bits_outer, ring_bits_inner], x0, y0, x1 - x0, y1 - y0)
        canvas[y0:y1, x0:x1][bits] = pal["line"]
    if noise_seed is not None:
        noise = np.random.default_rng(noise_seed).normal(0, 2.5, size=canvas.shape)
        canvas = np.clip(canvas + noise, 0, 255).astype(np.uint8)
    return canvas


def person_ring(bx: float, by: float, pw: float, ph: float) -> list[float]:
    """Rough standing-figure outline whose bbox bottom-centre is (bx, by)."""
    x0, top = bx - pw / 2, by - ph
    pts = [
        (bx - 0.18 * pw, top), (bx + 0.18 * pw, top),
        (bx + 0.22 * pw, top + 0.16 * ph), (bx + 0.5 * pw, top + 0.24 * ph),
        (bx + 0.42 * pw, top + 0.58 * ph), (bx + 0.28 * pw, top + 0.6 * ph),
        (bx + 0.3 * pw, by), (bx + 0.04 * pw, by), (bx, top + 0.7 * ph),
        (bx - 0.04 * pw, by), (bx - 0.3 * pw, by), (bx - 0.28 * pw, top + 0.6 * ph),
        (x0 + 0.08 * pw, top + 0.58 * ph), (x0, top + 0.24 * ph), (bx - 0.22 * pw, top + 0.16 * ph),
    ]
    return points_to_flat(pts)


def ball_ring(cx: float, cy: float, r: float) -> list[float]:
    return points_to_flat((cx + r * math.cos(a), cy + r * math.sin(a)) for a in np.linspace(0, 2 * math.pi, 16, endpoint=False))


def _place_objects(rng, width, height, spec: CourtSpec, n_players: int, n_officials: int):
    """(ring, category_id, kind) triples with non-overlapping boxes."""
    corners = spec.corners(width, height)
    cx = sum(p[0] for p in corners) / 4
    cy = sum(p[1] for p in corners) / 4
    t = math.radians(spec.angle)
    c, s = math.cos(t), math.sin(t)
    hw, hh = spec.w * width / 2, spec.h * height / 2
    ph0 = 0.13 * height

    def to_frame(u, v):  # court-local (u, v) in [-1, 1]
        x, y = u * hw, v * hh
        return cx + x * c - y * s, cy + x * s + y * c

    out, boxes = [], []

    def try_add(ring, cat, kind):
        xs, ys = ring[0::2], ring[1::2]
        box = (min(xs) - 3, min(ys) - 3, max(xs) + 3, max(ys) + 3)
        if box[0] < 1 or box[1] < 1 or box[2] > width - 1 or box[3] > height - 1:
            return False
        for b in boxes:
            if box[0] < b[2] and b[0] < box[2] and box[1] < b[3] and b[1] < box[3]:
                return False
        boxes.append(box)
        out.append((ring, cat, kind))
        return True

    for kind, count in (("player", n_players), ("official", n_officials), ("ball", 1)):
        placed = tries = 0
        while placed < count and tries < 200:
            tries += 1
            ph = ph0 * rng.uniform(0.85, 1.15)
            pw = ph * rng.uniform(0.36, 0.46)
            if kind == "player":
                bx, by = to_frame(rng.uniform(-0.7, 0.7), rng.uniform(-0.6, 0.7))
                ring, cat = person_ring(bx, by, pw, ph), 1
            elif kind == "official":
                side = rng.integers(4)
                u = rng.uniform(-0.8, 0.8)
                off = rng.uniform(0.97, 1.1)
                uv = [(u, -off), (u, off), (-off, u), (off, u)][side]
                bx, by = to_frame(*uv)
                ring, cat = person_ring(bx, by, pw, ph), 1
            else:
                bx, by = to_frame(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6))
                ring, cat = ball_ring(bx, by - ph0 * 0.5, max(4.0, 0.012 * height)), 2
            if try_add(ring, cat, kind):
                placed += 1
    return out


def render_scene(width: int, height: int, spec: CourtSpec, rng: np.random.Generator, n_players: int = 8,
                 n_officials: int = 3, image_id: int = 1):
    """Court render with players, officials and a ball; returns (Raster, annotations)."""
    canvas = render_court(width, height, spec, noise_seed=int(rng.integers(2**31)))
    objs = _place_objects(rng, width, height, spec, n_players, n_officials)
    team_colors = [tuple(int(v) for v in rng.integers(0, 256, 3)) for _ in range(2)]
    anns = []
    for i, (ring, cat, kind) in enumerate(objs):
        if kind == "player":
            color = team_colors[i % 2]
        elif kind == "official":
            color = (20, 20, 20) if i % 2 else (235, 235, 235)
        else:
            color = (230, 110, 30)
        _fill(canvas, ring, color)
        a = retighten(Annotation(i + 1, image_id, cat, (0, 0, 0, 0), [ring], 0.0), width, height)
        if a is not None:
            anns.append(a)
    return Raster(canvas), anns


def make_dataset(n_images: int, width: int = 1280, height: int = 720, seed: int = 0, splits=None,
                 n_players: int = 8, n_officials: int = 3):
    """In-memory synthetic dataset; returns (Dataset, {image_id: Raster}, {image_id: CourtSpec})."""
    rng = np.random.default_rng(seed)
    images, anns, rasters, specs = [], [], {}, {}
    next_ann = 1
    for i in range(n_images):
        image_id = i + 1
        spec = random_court(rng)
        img, objs = render_scene(width, height, spec, rng, n_players, n_officials, image_id)
        split = splits[i] if splits is not None else "train"
        images.append(ImageRecord(image_id, f"img_{image_id:04d}.png", width, height, spec.arena, split,
                                  {"synth_court_bbox": list(spec.bbox(width, height))}))
        for a in objs:
            a.id = next_ann
            next_ann += 1
            anns.append(a)
        rasters[image_id] = img
        specs[image_id] = spec
    return Dataset(images, anns, list(CATEGORIES)), rasters, specs


def write_dataset(out_dir, n_images: int, width: int = 1280, height: int = 720, seed: int = 0, splits=None) -> Dataset:
    """Write ``images/*.png`` and ``annotations.json`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    ds, rasters, _ = make_dataset(n_images, width, height, seed, splits)
    for im in ds.images:
        write_image(out / "images" / im.file_name, rasters[im.id])
    save(out / "annotations.json", ds)
    return ds
