"""Canny edge detection and probabilistic Hough line segments, in numpy."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmall
from .raster import Raster

# Half-width (px) of the band around a candidate line that counts as support.
CORRIDOR = 2.0
_REFINE_ITERS = 2
_VOTE_CHUNK = 16384


@dataclass(frozen=True, eq=False)
class EdgeMap:
    edges: np.ndarray  # (H, W) bool

    @property
    def height(self) -> int:
        return self.edges.shape[0]

    @property
    def width(self) -> int:
        return self.edges.shape[1]

    def count(self) -> int:
        return int(self.edges.sum())

    def to_raster(self) -> Raster:
        return Raster((self.edges * 255).astype(np.uint8))


@dataclass(frozen=True)
class HoughParams:
    rho_resolution: float = 1.0
    theta_resolution: float = math.pi / 180
    vote_threshold: int = 80
    min_line_length: float = 50.0
    max_line_gap: float = 10.0
    sample_fraction: float = 1.0

    def __post_init__(self):
        for name in ("rho_resolution", "theta_resolution", "vote_threshold", "min_line_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"HoughParams.{name} must be > 0")
        if self.max_line_gap < 0:
            raise ValueError("HoughParams.max_line_gap must be >= 0")
        if not (0 < self.sample_fraction <= 1):
            raise ValueError("HoughParams.sample_fraction must be in (0, 1]")


@dataclass(frozen=True)
class LineSegment:
    """Detected segment between two edge pixels.

    ``rho``/``theta`` are the accumulator cell that produced the segment,
    with rho = x*cos(theta) + y*sin(theta) and theta in [0, pi).
    """

    p0: tuple[int, int]
    p1: tuple[int, int]
    rho: float = 0.0
    theta: float = 0.0

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def normal_angle(self) -> float:
        """Normal direction of the segment itself, folded into [0, pi)."""
        dx, dy = self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]
        return (math.atan2(dy, dx) + math.pi / 2) % math.pi


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _correlate_axis(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    r = len(k) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    p = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    out = np.zeros(a.shape, dtype=np.float32)
    for i, w in enumerate(k):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += np.float32(w) * p[tuple(sl)]
    return out


def gaussian_blur(a: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    return _correlate_axis(_correlate_axis(a.astype(np.float32), k, 0), k, 1)


def sobel(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(a, 1, mode="edge")
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    return gx, gy


def non_max_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep gradient maxima along the gradient direction, quantised to 4 sectors."""
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)  # 0: horizontal gradient
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    p = np.pad(mag, 1, mode="constant")
    c = p[1:-1, 1:-1]
    # (forward, backward) neighbour for each sector, as (dy, dx); y grows downward
    offsets = {0: ((0, 1), (0, -1)), 1: ((1, 1), (-1, -1)), 2: ((1, 0), (-1, 0)), 3: ((1, -1), (-1, 1))}
    keep = np.zeros(mag.shape, dtype=bool)
    h, w = mag.shape
    for s, ((fy, fx), (by, bx)) in offsets.items():
        fwd = p[1 + fy:1 + fy + h, 1 + fx:1 + fx + w]
        bwd = p[1 + by:1 + by + h, 1 + bx:1 + bx + w]
        # strict on one side breaks ties between equal twin maxima
        keep |= (sector == s) & (c > fwd) & (c >= bwd)
    return np.where(keep, mag, 0.0).astype(np.float32)


def hysteresis(nms: np.ndarray, low: float, high: float) -> np.ndarray:
    weak = nms >= low
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return np.zeros(nms.shape, dtype=bool)
    keep = np.zeros(n + 1, dtype=bool)
    keep[labels[nms >= high]] = True
    keep[0] = False
    return keep[labels]


def canny(img: Raster, low_threshold: float = 50.0, high_threshold: float = 150.0, sigma: float = 1.4) -> EdgeMap:
    """Canny edges of a single-channel raster.

    Thresholds apply to the Sobel gradient magnitude of the blurred 0..255
    image. Borders are replicated.
    """
    if img.channels != 1:
        raise ValueError("canny expects a single-channel raster; use to_gray first")
    if not (0 < low_threshold <= high_threshold):
        raise ValueError("need 0 < low_threshold <= high_threshold")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    min_side = 2 * math.ceil(3 * sigma) + 1
    if min(img.width, img.height) < min_side:
        raise ImageTooSmall(f"{img.width}x{img.height} image is below {min_side} px for sigma={sigma}")
    blurred = gaussian_blur(img.data[:, :, 0], sigma)
    gx, gy = sobel(blurred)
    mag = np.hypot(gx, gy)
    nms = non_max_suppression(mag, gx, gy)
    return EdgeMap(hysteresis(nms, low_threshold, high_threshold))


class _Accumulator:
    def __init__(self, width, height, params: HoughParams):
        self.n_theta = max(1, int(round(math.pi / params.theta_resolution)))
        self.thetas = np.arange(self.n_theta) * params.theta_resolution
        self.cos = np.cos(self.thetas)
        self.sin = np.sin(self.thetas)
        self.rho_res = params.rho_resolution
        max_rho = math.hypot(width, height)
        self.offset = int(math.ceil(max_rho / self.rho_res)) + 1
        self.n_rho = 2 * self.offset + 1
        self.votes = np.zeros(self.n_rho * self.n_theta, dtype=np.int64)

    def _flat_index(self, xs, ys):
        rho = np.rint((xs[:, None] * self.cos + ys[:, None] * self.sin) / self.rho_res).astype(np.int64)
        return ((rho + self.offset) * self.n_theta + np.arange(self.n_theta)).ravel()

    def add(self, xs, ys, sign=1):
        size = self.votes.size
        for i in range(0, len(xs), _VOTE_CHUNK):
            idx = self._flat_index(xs[i:i + _VOTE_CHUNK], ys[i:i + _VOTE_CHUNK])
            counts = np.bincount(idx, minlength=size)
            if sign > 0:
                self.votes += counts
            else:
                self.votes -= counts

    def cell(self, flat) -> tuple[float, float]:
        ri, ti = divmod(int(flat), self.n_theta)
        return (ri - self.offset) * self.rho_res, float(self.thetas[ti])


def _fit_line(xs, ys):
    """Total least squares line through points, as (point, unit direction)."""
    cx, cy = xs.mean(), ys.mean()
    dx, dy = xs - cx, ys - cy
    cov = np.array([[np.dot(dx, dx), np.dot(dx, dy)], [np.dot(dx, dy), np.dot(dy, dy)]])
    evals, evecs = np.linalg.eigh(cov)
    d = evecs[:, 1]
    return (cx, cy), (d[0], d[1])


def _split_runs(t: np.ndarray, max_gap: float):
    """Indices (into sorted t) of contiguous runs; a run breaks where the step exceeds the gap."""
    if len(t) == 0:
        return []
    breaks = np.nonzero(np.diff(t) > max_gap + 1.5)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks + 1, [len(t)]))
    return list(zip(starts, ends))


def _trace(xs, ys, rho, theta, params: HoughParams):
    """Supporting runs of alive edge pixels for the line (rho, theta).

    Returns a list of index arrays into ``xs``/``ys``, one per kept run.
    """
    c, s = math.cos(theta), math.sin(theta)
    origin = (rho * c, rho * s)
    direction = (-s, c)
    dist = (xs - origin[0]) * c + (ys - origin[1]) * s
    sel = np.nonzero(np.abs(dist) <= CORRIDOR)[0]
    if len(sel) < 2:
        return []
    for _ in range(_REFINE_ITERS):
        t = (xs[sel] - origin[0]) * direction[0] + (ys[sel] - origin[1]) * direction[1]
        order = np.argsort(t, kind="stable")
        runs = _split_runs(t[order], params.max_line_gap)
        a, b = max(runs, key=lambda r: r[1] - r[0])
        if b - a < 2:
            break
        members = sel[order[a:b]]
        origin, direction = _fit_line(xs[members].astype(np.float64), ys[members].astype(np.float64))
        n = (-direction[1], direction[0])
        dist = (xs - origin[0]) * n[0] + (ys - origin[1]) * n[1]
        sel = np.nonzero(np.abs(dist) <= CORRIDOR)[0]
        if len(sel) < 2:
            return []
    t = (xs[sel] - origin[0]) * direction[0] + (ys[sel] - origin[1]) * direction[1]
    order = np.argsort(t, kind="stable")
    ts = t[order]
    kept = []
    for a, b in _split_runs(ts, params.max_line_gap):
        if ts[b - 1] - ts[a] >= params.min_line_length:
            kept.append(sel[order[a:b]])
    return kept


def hough_segments(edges: EdgeMap, params: HoughParams = HoughParams(), rng: np.random.Generator | None = None) -> list[LineSegment]:
    """Probabilistic Hough transform over an edge map.

    A shuffled ``sample_fraction`` of the edge pixels vote into a (rho, theta)
    accumulator. Cells are then visited strongest first; for each cell still
    holding at least ``vote_threshold`` votes, the supporting pixels along the
    line are split at gaps wider than ``max_line_gap`` and every run at least
    ``min_line_length`` long becomes a segment. Pixels of emitted segments are
    removed and their votes withdrawn before the next cell is examined.
    """
    ys, xs = np.nonzero(edges.edges)
    if len(xs) == 0:
        return []
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    n = len(xs)
    acc = _Accumulator(edges.width, edges.height, params)
    voter = np.zeros(n, dtype=bool)
    if params.sample_fraction >= 1.0:
        voter[:] = True
    else:
        order = (rng or np.random.default_rng(0)).permutation(n)
        voter[order[: max(1, int(math.ceil(params.sample_fraction * n)))]] = True
    acc.add(xs[voter], ys[voter])

    alive = np.ones(n, dtype=bool)
    cand = np.nonzero(acc.votes >= params.vote_threshold)[0]
    heap = [(-int(acc.votes[i]), int(i)) for i in cand]
    heapq.heapify(heap)
    segments: list[LineSegment] = []
    while heap:
        neg, flat = heapq.heappop(heap)
        v = int(acc.votes[flat])
        if v < params.vote_threshold:
            continue
        if v < -neg:
            heapq.heappush(heap, (-v, flat))
            continue
        live = np.nonzero(alive)[0]
        rho, theta = acc.cell(flat)
        runs = _trace(xs[live], ys[live], rho, theta, params)
        if not runs:
            continue
        for run in runs:
            idx = live[run]
            # extreme pixels along the run are its endpoints
            i0, i1 = idx[0], idx[-1]
            segments.append(LineSegment((int(xs[i0]), int(ys[i0])), (int(xs[i1]), int(ys[i1])), rho, theta))
            alive[idx] = False
            withdraw = idx[voter[idx]]
            if len(withdraw):
                acc.add(xs[withdraw], ys[withdraw], sign=-1)
        v = int(acc.votes[flat])
        if v >= params.vote_threshold:
            heapq.heappush(heap, (-v, flat))
    return segments
