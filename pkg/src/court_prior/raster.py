"""Owned 8-bit pixel grids plus the handful of primitive operations on them."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyCrop, MalformedImage, UnsupportedFormat

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8\xff"


@dataclass(frozen=True)
class Rect:
    """Integer axis-aligned rectangle; ``w == 0`` or ``h == 0`` means empty."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative rect extent: {self}")

    @classmethod
    def from_ltrb(cls, left, top, right, bottom) -> "Rect":
        return cls(int(left), int(top), max(0, int(right) - int(left)), max(0, int(bottom) - int(top)))

    @property
    def right(self) -> int:
        return self.x + self.w

    @property
    def bottom(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def is_empty(self) -> bool:
        return self.w == 0 or self.h == 0

    def intersect(self, other: "Rect") -> "Rect":
        left, top = max(self.x, other.x), max(self.y, other.y)
        right, bottom = min(self.right, other.right), min(self.bottom, other.bottom)
        if right <= left or bottom <= top:
            return Rect(left, top, 0, 0)
        return Rect(left, top, right - left, bottom - top)

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True, eq=False)
class Raster:
    """Row-major interleaved uint8 samples, stored as an (H, W, C) array.

    The array is made read-only on construction so a Raster can be shared
    between threads without copying.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.dtype != np.uint8:
            raise TypeError(f"Raster needs uint8 samples, got {a.dtype}")
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise ValueError(f"Raster needs 1 or 3 channels, got shape {a.shape}")
        if a.shape[0] == 0 or a.shape[1] == 0:
            raise ValueError("Raster dimensions must be positive")
        if a.flags.writeable or not a.flags.c_contiguous:
            a = np.array(a, order="C", copy=True)
            a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def bounds(self) -> Rect:
        return Rect(0, 0, self.width, self.height)

    def pixel(self, x: int, y: int) -> tuple[int, ...]:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise IndexError(f"pixel ({x}, {y}) outside {self.width}x{self.height}")
        return tuple(int(v) for v in self.data[y, x])

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))

    @classmethod
    def solid(cls, width: int, height: int, color) -> "Raster":
        color = np.atleast_1d(np.asarray(color, dtype=np.uint8))
        return cls(np.broadcast_to(color, (height, width, color.size)).copy())


def decode(blob: bytes) -> Raster:
    """Decode a PNG or JPEG byte stream into a 3-channel raster."""
    if not (blob.startswith(PNG_MAGIC) or blob.startswith(JPEG_MAGIC)):
        raise UnsupportedFormat("stream is neither PNG nor JPEG")
    try:
        with Image.open(io.BytesIO(blob)) as im:
            im.load()
            rgb = im.convert("RGB")
    except Exception as exc:  # PIL raises a zoo of types for bad streams
        raise MalformedImage(f"cannot decode image: {exc}") from exc
    return Raster(np.asarray(rgb, dtype=np.uint8))


def encode(img: Raster, fmt: str = "png", quality: int = 95) -> bytes:
    mode = "L" if img.channels == 1 else "RGB"
    arr = img.data[:, :, 0] if img.channels == 1 else img.data
    pil = Image.fromarray(arr, mode=mode)
    buf = io.BytesIO()
    fmt = fmt.lower()
    if fmt == "png":
        # Level 1 keeps large batch writes fast; output stays deterministic.
        pil.save(buf, format="PNG", compress_level=1)
    elif fmt in ("jpg", "jpeg"):
        pil.save(buf, format="JPEG", quality=quality)
    else:
        raise UnsupportedFormat(f"cannot encode as {fmt!r}")
    return buf.getvalue()


def read_image(path) -> Raster:
    path = Path(path)
    try:
        return decode(path.read_bytes())
    except (MalformedImage, UnsupportedFormat) as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def write_image(path, img: Raster) -> None:
    path = Path(path)
    fmt = "jpeg" if path.suffix.lower() in (".jpg", ".jpeg") else "png"
    path.write_bytes(encode(img, fmt))


def to_gray(img: Raster) -> Raster:
    if img.channels == 1:
        return img
    rgb = img.data.astype(np.float64)
    gray = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return Raster(np.clip(np.floor(gray + 0.5), 0, 255).astype(np.uint8))


def crop(img: Raster, r: Rect) -> Raster:
    """Crop to ``r`` intersected with the image; raises EmptyCrop if nothing is left."""
    inter = r.intersect(img.bounds)
    if inter.is_empty:
        raise EmptyCrop(f"{r} does not overlap a {img.width}x{img.height} image")
    return Raster(img.data[inter.y:inter.bottom, inter.x:inter.right])


def _bilinear_axis(n_src: int, n_dst: int):
    # half-pixel centres: src = (dst + 0.5) * n_src / n_dst - 0.5
    pos = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst) - 0.5
    pos = np.clip(pos, 0.0, n_src - 1)
    i0 = np.floor(pos).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_src - 1)
    return i0, i1, (pos - i0).astype(np.float32)


def resize_array(a: np.ndarray, w: int, h: int) -> np.ndarray:
    """Bilinear resize of an (H, W, C) array to (h, w, C) float32."""
    x0, x1, wx = _bilinear_axis(a.shape[1], w)
    y0, y1, wy = _bilinear_axis(a.shape[0], h)
    src = a.astype(np.float32)
    wy = wy[:, None, None]
    rows = src[y0] * (1 - wy) + src[y1] * wy
    wx = wx[None, :, None]
    return rows[:, x0] * (1 - wx) + rows[:, x1] * wx


def resize(img: Raster, w: int, h: int) -> Raster:
    if w <= 0 or h <= 0:
        raise ValueError(f"resize target must be positive, got {w}x{h}")
    if (w, h) == (img.width, img.height):
        return img
    out = resize_array(img.data, w, h)
    return Raster(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def resize_nearest(a: np.ndarray, w: int, h: int) -> np.ndarray:
    """Nearest-neighbour resize (used for masks), same centre convention as bilinear."""
    xs = np.minimum(((np.arange(w) + 0.5) * (a.shape[1] / w)).astype(np.intp), a.shape[1] - 1)
    ys = np.minimum(((np.arange(h) + 0.5) * (a.shape[0] / h)).astype(np.intp), a.shape[0] - 1)
    return a[ys][:, xs]


def hflip(img: Raster) -> Raster:
    return Raster(img.data[:, ::-1])


def scaled_dims(w: int, h: int, s: float) -> tuple[int, int]:
    return max(1, int(math.floor(w * s + 0.5))), max(1, int(math.floor(h * s + 0.5)))
