"""Adaptive-depth completion.

Each frame is tiled by overlapping windows. For every window the sparse
color-motion estimate sets how many frames before and after the current one
join the spatio-temporal filter, and the per-window results are blended back
together with a Gaussian centered on each window.

A depth of d frames on one side includes the current frame, so d = 1 on both
sides is plain per-frame filtering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Color, DenseFrame, SparseVideo, to_dense
from .efan import EfanParams, FramePlanes, _pool_map, default_params, splat_frame
from .motion import DepthField, MotionParams, Window, estimate_depths, window_grid


@dataclass(frozen=True)
class AdefanParams:
    efan: EfanParams
    motion: MotionParams = field(default_factory=MotionParams)
    window_stride: int | None = None
    blend_sigma_ratio: float = 6.0

    def __post_init__(self):
        if not 1 <= self.stride <= self.motion.window_size:
            raise ValueError("window stride must lie in [1, window_size]")
        if not self.blend_sigma_ratio > 0:
            raise ValueError("blend_sigma_ratio must be positive")

    @property
    def stride(self) -> int:
        if self.window_stride is None:
            return max(self.motion.window_size // 2, 1)
        return self.window_stride

    @classmethod
    def for_fraction(cls, fraction: float, **motion_overrides) -> "AdefanParams":
        return cls(default_params(fraction), MotionParams.for_fraction(fraction, **motion_overrides))

    def windows(self, width: int, height: int) -> list[Window]:
        return window_grid(width, height, self.motion.window_size, self.stride)


def blend_weights(window: Window, sigma_ratio: float = 6.0) -> np.ndarray:
    """Gaussian of distance to the nominal window center, sigma = size / ratio."""
    sigma = window.size / sigma_ratio
    cy = window.y0 + window.size // 2
    cx = window.x0 + window.size // 2
    dy = np.arange(window.y0, window.y1) - cy
    dx = np.arange(window.x0, window.x1) - cx
    d2 = dy[:, None] ** 2 + dx[None, :] ** 2
    return np.exp(-d2 / (2 * sigma * sigma))


def compute_depth_fields(video: SparseVideo, params: AdefanParams, div_scale: float = 1.0) -> list[DepthField]:
    """``div_scale`` multiplies every measured divergence (sensitivity hook)."""
    return estimate_depths(video, params.windows(video.width, video.height), params.motion, div_scale)


def complete_window(video: SparseVideo, l: int, window: Window, depth_fwd: int, depth_bwd: int,
                    params: AdefanParams, planes: FramePlanes | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Filtered window content (NaN where unreachable) and its blend weights.

    The temporal extent is frames l - (depth_bwd - 1) .. l + (depth_fwd - 1),
    clipped to the video. Spatially the result equals a full-frame filter at
    those pixels, since the per-frame accumulators already hold every sample
    within the kernel radius.
    """
    for d in (depth_fwd, depth_bwd):
        if not 1 <= d <= params.motion.fr_max:
            raise ValueError(f"depth {d} outside [1, {params.motion.fr_max}]")
    if planes is None:
        planes = FramePlanes(video, params.efan)
    values = planes.values(l, l - (depth_bwd - 1), l + (depth_fwd - 1), window.region)
    weights = blend_weights(window, params.blend_sigma_ratio)
    weights[np.isnan(values).any(axis=2)] = 0.0
    return values, weights


def assemble_values(partials, width: int, height: int) -> np.ndarray:
    """Weighted average of overlapping window contents; NaN where no weight."""
    numer = np.zeros((height, width, 3))
    denom = np.zeros((height, width))
    for window, values, weights in partials:
        ys, xs = window.region
        hit = weights > 0
        contrib = np.where(hit[:, :, None], values, 0.0) * weights[:, :, None]
        numer[ys, xs] += contrib
        denom[ys, xs] += weights
    out = np.full((height, width, 3), np.nan)
    hit = denom > 0
    out[hit] = numer[hit] / denom[hit][:, None]
    return out


def assemble_frame(partials, width: int, height: int, fallback: Color = (0, 0, 0)) -> DenseFrame:
    """``partials``: iterable of (window, values, weights)."""
    return to_dense(assemble_values(partials, width, height), fallback)


@dataclass
class AdefanResult:
    frames: list[DenseFrame]
    depths: list[DepthField]


def run_adefan(video: SparseVideo, params: AdefanParams, fallback: Color = (0, 0, 0), threads: int = 1,
               depth_override: int | None = None, div_scale: float = 1.0) -> AdefanResult:
    """Full pipeline. ``depth_override`` forces one depth on every window and side."""
    windows = params.windows(video.width, video.height)
    if depth_override is None:
        depths = compute_depth_fields(video, params, div_scale)
    else:
        forced = np.full(len(windows), depth_override, dtype=int)
        depths = [DepthField(l, windows, forced, forced) for l in range(len(video))]
    planes = FramePlanes(video, params.efan, threads)

    def one_frame(l: int) -> DenseFrame:
        field_ = depths[l]
        partials = [
            (win, *complete_window(video, l, win, int(f), int(b), params, planes))
            for win, f, b in zip(windows, field_.forward, field_.backward)
        ]
        return assemble_frame(partials, video.width, video.height, fallback)

    frames = _pool_map(one_frame, list(range(len(video))), threads)
    return AdefanResult(frames, depths)


def complete_video_adefan(video: SparseVideo, params: AdefanParams, fallback: Color = (0, 0, 0),
                          threads: int = 1, depth_override: int | None = None,
                          div_scale: float = 1.0) -> list[DenseFrame]:
    return run_adefan(video, params, fallback, threads, depth_override, div_scale).frames


def complete_video_windowed(video: SparseVideo, params: AdefanParams, halfwidth: int,
                            fallback: Color = (0, 0, 0)) -> list[DenseFrame]:
    """Reference path: fixed-extent filter on whole frames, cropped and blended.

    ``halfwidth`` 0 gives windowed per-frame filtering; ``fr_max - 1`` the
    windowed max-depth spatio-temporal filter.
    """
    windows = params.windows(video.width, video.height)
    if halfwidth == 0:
        full = [splat_frame(fr, params.efan).values() for fr in video]
    else:
        planes = FramePlanes(video, params.efan)
        full = [planes.values(z, z - halfwidth, z + halfwidth) for z in range(len(video))]
    out = []
    for values in full:
        partials = []
        for win in windows:
            crop = values[win.region]
            weights = blend_weights(win, params.blend_sigma_ratio)
            weights[np.isnan(crop).any(axis=2)] = 0.0
            partials.append((win, crop, weights))
        out.append(assemble_frame(partials, video.width, video.height, fallback))
    return out

