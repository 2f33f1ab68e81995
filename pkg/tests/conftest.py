import math

import numpy as np
import pytest

from court_prior import synth
from court_prior.raster import Raster

# acceptance results, printed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")


def even_odd_oracle(rings, x, y):
    """Slow reference even-odd test of one point against flat polygon rings."""
    inside = False
    for ring in rings:
        pts = list(zip(ring[0::2], ring[1::2]))
        for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
            if (y0 <= y) != (y1 <= y):
                xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
                if xc > x:
                    inside = not inside
    return inside


def mask_oracle(rings, width, height):
    out = np.zeros((height, width), dtype=bool)
    for yy in range(height):
        for xx in range(width):
            out[yy, xx] = even_odd_oracle(rings, xx + 0.5, yy + 0.5)
    return out


def solid(w, h, color):
    return Raster(np.full((h, w, 3), color, dtype=np.uint8))


@pytest.fixture(scope="session")
def small_corpus():
    """Eight 480x270 synthetic frames across three splits."""
    splits = ["train"] * 4 + ["val"] * 2 + ["test"] * 2
    ds, rasters, specs = synth.make_dataset(8, 480, 270, seed=11, splits=splits)
    return ds, rasters, specs


def dist_to_segment(p, a, b):
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def hull_oracle(points):
    """Hull vertex set by brute force: endpoints of every maximal all-left edge."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    verts = set()
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            if i == j:
                continue
            ok = True
            for k, c in enumerate(pts):
                if k in (i, j):
                    continue
                cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if cr < 0:
                    ok = False
                    break
                if cr == 0:
                    # collinear points must lie strictly between a and b
                    t = (c[0] - a[0]) * (b[0] - a[0]) + (c[1] - a[1]) * (b[1] - a[1])
                    if t < 0 or t > (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2:
                        ok = False
                        break
            if ok:
                verts.update((a, b))
    return verts


def polygon_raster_oracle(vertices, width, height):
    """1 px containment raster drawn by Pillow (independent fill code).

    Pixel [j, i] answers "is the point (i, j) inside"; vertices should be
    integers because Pillow rounds them.
    """
    from PIL import Image, ImageDraw

    im = Image.new("1", (width, height), 0)
    ImageDraw.Draw(im).polygon([(int(x), int(y)) for x, y in vertices], fill=1, outline=None)
    return np.asarray(im, dtype=bool)


def boundary_distance(vertices, p):
    n = len(vertices)
    return min(dist_to_segment(p, vertices[i], vertices[(i + 1) % n]) for i in range(n))
