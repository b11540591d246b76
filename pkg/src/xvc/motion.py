"""Sparse color-motion estimation.

Color change inside a window is measured as the KL divergence between the
per-channel intensity histograms of two frames, after mixing each histogram
with a uniform distribution so that empty bins never produce infinities.
Divergences use the natural logarithm and are averaged over R, G and B; the
default ``beta`` of 14 is calibrated against exactly that scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DenseFrame, SparseFrame, SparseVideo

BINS = 256
ALPHA = 0.95
BETA = 14.0
FR_MAX = 49
MIN_SAMPLES = 8


@dataclass(frozen=True)
class Window:
    """Half-open pixel rectangle [x0, x1) x [y0, y1) on a grid of nominal side ``size``.

    Windows touching the right/bottom border are clipped, so ``x1 - x0`` may
    be smaller than ``size``; the nominal square is kept for blending.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    size: int

    @property
    def region(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    @property
    def shape(self) -> tuple[int, int]:
        return self.y1 - self.y0, self.x1 - self.x0


def grid_origins(extent: int, size: int, stride: int) -> list[int]:
    origins = [0]
    while origins[-1] + size < extent:
        origins.append(origins[-1] + stride)
    return origins


def window_grid(width: int, height: int, size: int, stride: int | None = None) -> list[Window]:
    """Windows covering the frame in raster order; stride defaults to size // 2."""
    if size < 1:
        raise ValueError("window size must be at least 1")
    stride = stride or max(size // 2, 1)
    if not 1 <= stride <= size:
        raise ValueError(f"window stride must be in [1, {size}], got {stride}")
    return [
        Window(x, y, min(x + size, width), min(y + size, height), size)
        for y in grid_origins(height, size, stride)
        for x in grid_origins(width, size, stride)
    ]


def default_window_size(fraction: float) -> int:
    """Smallest even side >= 160 * sqrt(0.01 / f), clamped to [80, 160]."""
    size = math.ceil(160 * math.sqrt(0.01 / fraction))
    size += size % 2
    return min(max(size, 80), 160)


@dataclass(frozen=True)
class MotionParams:
    alpha: float = ALPHA
    beta: float = BETA
    window_size: int = 160
    fr_max: int = FR_MAX

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.window_size < 1:
            raise ValueError("window_size must be at least 1")
        if self.fr_max < 1:
            raise ValueError("fr_max must be at least 1")

    @classmethod
    def for_fraction(cls, fraction: float, **overrides) -> "MotionParams":
        overrides.setdefault("window_size", default_window_size(fraction))
        return cls(**overrides)


@dataclass(frozen=True, eq=False)
class ColorHistogram:
    bins: np.ndarray  # (3, 256), each row sums to 1 unless count == 0
    count: int

    @classmethod
    def from_values(cls, rgb: np.ndarray) -> "ColorHistogram":
        rgb = np.asarray(rgb).reshape(-1, 3)
        n = len(rgb)
        bins = np.zeros((3, BINS))
        if n:
            for ch in range(3):
                bins[ch] = np.bincount(rgb[:, ch], minlength=BINS) / n
        return cls(bins, n)


def histogram(frame: SparseFrame, window: Window) -> ColorHistogram:
    inside = (
        (frame.xs >= window.x0) & (frame.xs < window.x1)
        & (frame.ys >= window.y0) & (frame.ys < window.y1)
    )
    return ColorHistogram.from_values(frame.colors[inside])


def dense_histogram(frame: DenseFrame, window: Window) -> ColorHistogram:
    return ColorHistogram.from_values(frame.data[window.region])


def smooth(bins: np.ndarray, alpha: float) -> np.ndarray:
    return alpha * bins + (1 - alpha) / BINS


def smoothed_kl(p: ColorHistogram, q: ColorHistogram, alpha: float = ALPHA) -> float:
    if p.count == 0 or q.count == 0:
        raise ValueError("KL divergence of an empty histogram is undefined")
    ps, qs = smooth(p.bins, alpha), smooth(q.bins, alpha)
    per_channel = np.sum(ps * (np.log(ps) - np.log(qs)), axis=1)
    # mathematically >= 0; clip the last-ulp negatives of near-equal inputs
    return max(float(per_channel.mean()), 0.0)


def stop_divergence(divergences: Sequence[float | None]) -> float:
    """Apply the search stopping rule to d_1, d_2, ... (None = skipped offset).

    Walks forward while the divergence does not decrease and returns the last
    value before the first decrease; 0 when no offset is usable.
    """
    current = None
    for d in divergences:
        if d is None:
            continue
        if current is not None and d < current:
            break
        current = d
    return 0.0 if current is None else current


def _search(hists: Sequence[ColorHistogram], l: int, step: int, params: MotionParams) -> float:
    ref = hists[l]
    if ref.count < MIN_SAMPLES:
        return 0.0

    def divs():
        for m in range(1, params.fr_max + 1):
            j = l + step * m
            if not 0 <= j < len(hists):
                return
            other = hists[j]
            yield smoothed_kl(ref, other, params.alpha) if other.count >= MIN_SAMPLES else None

    return stop_divergence(divs())


def divergence_search(video: SparseVideo, window: Window, l: int, direction: str,
                      params: MotionParams) -> float:
    """div_next (direction='forward') or div_prev ('backward') for one window."""
    if not 0 <= l < len(video):
        raise IndexError(f"frame index {l} outside video of {len(video)} frames")
    step = _direction_step(direction)
    hists = [histogram(fr, window) for fr in video]
    return _search(hists, l, step, params)


def _direction_step(direction: str) -> int:
    if direction == "forward":
        return 1
    if direction == "backward":
        return -1
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def depth_from_divergence(div: float, fr_max: int = FR_MAX, beta: float = BETA) -> int:
    if div < 0:
        raise ValueError("divergence must be non-negative")
    depth = math.ceil(fr_max / (1 + beta * div))
    return min(max(depth, 1), fr_max)


@dataclass
class DepthField:
    """Per-window forward/backward temporal depths of one frame."""

    frame: int
    windows: list[Window]
    forward: np.ndarray
    backward: np.ndarray
    div_forward: np.ndarray = field(default=None)
    div_backward: np.ndarray = field(default=None)


def window_histograms(video: SparseVideo, windows: Sequence[Window]) -> list[list[ColorHistogram]]:
    """hists[w][l]: histogram of window w in frame l."""
    return [[histogram(fr, win) for fr in video] for win in windows]


def estimate_depths(video: SparseVideo, windows: Sequence[Window], params: MotionParams,
                    div_scale: float = 1.0) -> list[DepthField]:
    hists = window_histograms(video, windows)
    fields = []
    for l in range(len(video)):
        divs = np.array([
            [_search(h, l, 1, params), _search(h, l, -1, params)] for h in hists
        ]).reshape(-1, 2) * div_scale
        fwd = np.array([depth_from_divergence(d, params.fr_max, params.beta) for d in divs[:, 0]], dtype=int)
        bwd = np.array([depth_from_divergence(d, params.fr_max, params.beta) for d in divs[:, 1]], dtype=int)
        fields.append(DepthField(l, list(windows), fwd, bwd, divs[:, 0], divs[:, 1]))
    return fields


class CalibrationError(RuntimeError):
    def __init__(self, message: str, table: list[dict]):
        super().__init__(message)
        self.table = table


def window_pair_divergences(dense: Sequence[DenseFrame], sparse: SparseVideo, size: int,
                            alpha: float = ALPHA) -> tuple[np.ndarray, np.ndarray]:
    """Sparse and dense KL for every window of a 50%-overlap grid, consecutive frames.

    Pairs where either sparse window holds fewer than MIN_SAMPLES samples are
    dropped.
    """
    if len(dense) != len(sparse):
        raise ValueError("dense and sparse videos differ in length")
    windows = window_grid(sparse.width, sparse.height, size)
    est, truth = [], []
    for win in windows:
        sh = [histogram(fr, win) for fr in sparse]
        dh = [dense_histogram(fr, win) for fr in dense]
        for l in range(len(sparse) - 1):
            if sh[l].count < MIN_SAMPLES or sh[l + 1].count < MIN_SAMPLES:
                continue
            est.append(smoothed_kl(sh[l], sh[l + 1], alpha))
            truth.append(smoothed_kl(dh[l], dh[l + 1], alpha))
    return np.array(est), np.array(truth)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) < 2 or np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def calibration_table(dense: Sequence[DenseFrame], sparse: SparseVideo, candidate_sizes: Sequence[int],
                      alpha: float = ALPHA) -> list[dict]:
    rows = []
    for size in candidate_sizes:
        est, truth = window_pair_divergences(dense, sparse, size, alpha)
        mse = float(np.mean((est - truth) ** 2)) if len(est) else float("nan")
        rows.append({"window_size": size, "mse": mse, "pearson_r": pearson(est, truth), "pairs": len(est)})
    return rows


def calibrate_window_size(dense: Sequence[DenseFrame], sparse: SparseVideo, candidate_sizes: Sequence[int],
                          mse_range: tuple[float, float] = (0.15, 0.2), alpha: float = ALPHA) -> int:
    """Smallest candidate whose sparse-vs-dense KL error is at most mse_range[1]."""
    table = calibration_table(dense, sparse, sorted(candidate_sizes), alpha)
    for row in table:
        if row["mse"] <= mse_range[1]:
            return row["window_size"]
    listing = ", ".join(f"{r['window_size']}: {r['mse']:.4g}" for r in table)
    raise CalibrationError(f"no window size reaches MSE <= {mse_range[1]} ({listing})", table)
