"""Debug overlay of a detected court region on its frame."""
from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw

from .court import CourtRegion, StaticMargins
from .raster import Raster

GREEN = (0, 220, 0)
BLUE = (40, 90, 255)
RED = (255, 30, 30)


def _dashed(draw: ImageDraw.ImageDraw, pts, fill, width: int, dash: float = 12.0) -> None:
    closed = list(pts) + [pts[0]]
    for (x0, y0), (x1, y1) in zip(closed, closed[1:]):
        length = float(np.hypot(x1 - x0, y1 - y0))
        n = max(1, int(length // dash))
        for i in range(0, n, 2):
            t0, t1 = i / n, min(1.0, (i + 1) / n)
            draw.line([(x0 + (x1 - x0) * t0, y0 + (y1 - y0) * t0), (x0 + (x1 - x0) * t1, y0 + (y1 - y0) * t1)],
                      fill=fill, width=width)


def render_preview(img: Raster, region: CourtRegion, segments=None) -> Raster:
    """Hull in green, band inner boundary dashed green, static margins blue, crop red.

    ``segments`` (LineSegment list) are drawn thin red when given.
    """
    data = img.data if img.channels == 3 else np.repeat(img.data, 3, axis=2)
    canvas = Image.fromarray(np.ascontiguousarray(data), "RGB")
    draw = ImageDraw.Draw(canvas)
    w = max(2, img.height // 360)
    for s in segments or ():
        draw.line([tuple(s.p0), tuple(s.p1)], fill=RED, width=1)
    m = StaticMargins.for_size(img.width, img.height).rect()
    draw.rectangle([m.x, m.y, m.right - 1, m.bottom - 1], outline=BLUE, width=w)
    c = region.crop
    draw.rectangle([c.x, c.y, c.right - 1, c.bottom - 1], outline=RED, width=w)
    hull = [tuple(p) for p in region.hull.vertices]
    draw.line(hull + [hull[0]], fill=GREEN, width=w)
    _dashed(draw, [tuple(p) for p in region.interior.vertices], GREEN, w)
    return Raster(np.asarray(canvas))
