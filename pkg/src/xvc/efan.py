"""Filtering by adaptive normalization (EFAN) for frames and videos.

Each known sample splats a truncated Gaussian into a numerator/denominator
accumulator; dividing the two gives the normalized Gaussian-weighted average
of the known samples around every pixel.

Bit-exactness note: every path adds a pixel's contributions in the same
order, i.e. by the (y, x) raster order of the contributing samples, which is
also the raster order of the neighborhood offsets. The brute-force oracles
rely on this to match the fast path exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
import numpy as np

from .core import AccumulatorPlane, Color, DenseFrame, SparseFrame, SparseVideo, normalize, ratio, to_dense

SIGMA_T = 49 / 6
TEMPORAL_HALFWIDTH = 49


@dataclass(frozen=True)
class EfanParams:
    sigma: float
    radius: int
    sigma_t: float = SIGMA_T
    temporal_halfwidth: int = TEMPORAL_HALFWIDTH

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.radius < 1:
            raise ValueError("radius must be at least 1")
        if not self.sigma_t > 0:
            raise ValueError("sigma_t must be positive")
        if self.temporal_halfwidth < 0:
            raise ValueError("temporal_halfwidth must be non-negative")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1


def neighborhood_side(sigma: float) -> int:
    side = 2 * math.ceil(0.5 + 3 * sigma) + 5
    assert side % 2 == 1
    return side


def default_params(fraction: float) -> EfanParams:
    if not 0 < fraction <= 1:
        raise ValueError(f"sampling fraction must be in (0, 1], got {fraction!r}")
    sigma = math.sqrt(1 / (fraction * math.pi))
    return EfanParams(sigma, (neighborhood_side(sigma) - 1) // 2)


def spatial_weight(dx: int, dy: int, sigma: float) -> float:
    return math.exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma))


def temporal_weight(dz: int, sigma_t: float) -> float:
    return math.exp(-0.5 * (dz * dz) / (sigma_t * sigma_t))


@lru_cache(maxsize=32)
def kernel_table(sigma: float, radius: int) -> np.ndarray:
    r = range(-radius, radius + 1)
    table = np.array([[spatial_weight(dx, dy, sigma) for dx in r] for dy in r])
    table.setflags(write=False)
    return table


@lru_cache(maxsize=32)
def temporal_table(sigma_t: float, halfwidth: int) -> np.ndarray:
    table = np.array([temporal_weight(dz, sigma_t) for dz in range(halfwidth + 1)])
    table.setflags(write=False)
    return table


def splat_frame(frame: SparseFrame, params: EfanParams) -> AccumulatorPlane:
    """Accumulate every sample's truncated kernel, samples in raster order."""
    w, h = frame.width, frame.height
    acc = AccumulatorPlane(w, h)
    r = params.radius
    kern = kernel_table(params.sigma, r)
    numer, denom = acc.numer, acc.denom
    colors = frame.colors.astype(np.float64)
    for x, y, c in zip(frame.xs.tolist(), frame.ys.tolist(), colors):
        y0, y1 = max(y - r, 0), min(y + r + 1, h)
        x0, x1 = max(x - r, 0), min(x + r + 1, w)
        ks = kern[y0 - y + r:y1 - y + r, x0 - x + r:x1 - x + r]
        denom[y0:y1, x0:x1] += ks
        numer[y0:y1, x0:x1] += ks[:, :, None] * c
    return acc


def complete_frame_2d(frame: SparseFrame, params: EfanParams, fallback: Color = (0, 0, 0)) -> DenseFrame:
    return normalize(splat_frame(frame, params), fallback)


def oracle_2d(frame: SparseFrame, params: EfanParams, fallback: Color = (0, 0, 0)) -> DenseFrame:
    """Literal per-pixel evaluation of the normalized Gaussian average."""
    return to_dense(oracle_2d_values(frame, params), fallback)


def oracle_2d_values(frame: SparseFrame, params: EfanParams) -> np.ndarray:
    out = np.full((frame.height, frame.width, 3), np.nan)
    samples = frame.records()
    r, s2 = params.radius, params.sigma * params.sigma
    for iy in range(frame.height):
        for ix in range(frame.width):
            num = [0.0, 0.0, 0.0]
            den = 0.0
            for kx, ky, *rgb in samples:
                if abs(ix - kx) > r or abs(iy - ky) > r:
                    continue
                g = math.exp(-0.5 * ((ix - kx) ** 2 + (iy - ky) ** 2) / s2)
                for c in range(3):
                    num[c] += g * float(rgb[c])
                den += g
            if den > 0:
                out[iy, ix] = [v / den for v in num]
    return out


def _pool_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def complete_video_2d(video: SparseVideo, params: EfanParams, fallback: Color = (0, 0, 0),
                      threads: int = 1) -> list[DenseFrame]:
    return _pool_map(lambda fr: complete_frame_2d(fr, params, fallback), list(video), threads)


class FramePlanes:
    """Per-frame spatial accumulators of a whole video, stacked along time."""

    def __init__(self, video: SparseVideo, params: EfanParams, threads: int = 1):
        self.params = params
        self.width, self.height = video.width, video.height
        accs = _pool_map(lambda fr: splat_frame(fr, params), list(video), threads)
        self.numer = np.stack([a.numer for a in accs]) if accs else np.zeros((0, video.height, video.width, 3))
        self.denom = np.stack([a.denom for a in accs]) if accs else np.zeros((0, video.height, video.width))
        self.gt = temporal_table(params.sigma_t, max(len(accs), params.temporal_halfwidth + 1))

    def __len__(self):
        return len(self.numer)

    def combine(self, z: int, lo: int, hi: int, region=None) -> tuple[np.ndarray, np.ndarray]:
        """Temporal Gaussian sum of frames lo..hi (inclusive) seen from frame z.

        Frames are added in ascending order; callers that must agree bit for
        bit (EFAN3D, adaptive windows) all go through here.
        """
        ys, xs = region if region is not None else (slice(None), slice(None))
        numer = np.zeros(self.numer[0, ys, xs].shape)
        denom = np.zeros(self.denom[0, ys, xs].shape)
        tmp_n = np.empty_like(numer)
        tmp_d = np.empty_like(denom)
        for zz in range(max(lo, 0), min(hi, len(self) - 1) + 1):
            g = self.gt[abs(z - zz)]
            np.multiply(self.numer[zz, ys, xs], g, out=tmp_n)
            np.multiply(self.denom[zz, ys, xs], g, out=tmp_d)
            numer += tmp_n
            denom += tmp_d
        return numer, denom

    def values(self, z: int, lo: int, hi: int, region=None) -> np.ndarray:
        return ratio(*self.combine(z, lo, hi, region))


def complete_video_3d_values(video: SparseVideo, params: EfanParams, threads: int = 1) -> list[np.ndarray]:
    planes = FramePlanes(video, params, threads)
    hw = params.temporal_halfwidth
    return _pool_map(lambda z: planes.values(z, z - hw, z + hw), list(range(len(planes))), threads)


def complete_video_3d(video: SparseVideo, params: EfanParams, fallback: Color = (0, 0, 0),
                      threads: int = 1) -> list[DenseFrame]:
    return [to_dense(v, fallback) for v in complete_video_3d_values(video, params, threads)]


def oracle_3d_values(video: SparseVideo, params: EfanParams) -> list[np.ndarray]:
    """Literal spatio-temporal evaluation, weights G * G_t per sample."""
    r, hw = params.radius, params.temporal_halfwidth
    s2, st2 = params.sigma * params.sigma, params.sigma_t * params.sigma_t
    per_frame = [fr.records() for fr in video]
    outs = []
    for iz in range(len(video)):
        out = np.full((video.height, video.width, 3), np.nan)
        for iy in range(video.height):
            for ix in range(video.width):
                num = [0.0, 0.0, 0.0]
                den = 0.0
                for kz, samples in enumerate(per_frame):
                    if abs(iz - kz) > hw:
                        continue
                    gt = math.exp(-0.5 * ((iz - kz) ** 2) / st2)
                    for kx, ky, *rgb in samples:
                        if abs(ix - kx) > r or abs(iy - ky) > r:
                            continue
                        g = math.exp(-0.5 * ((ix - kx) ** 2 + (iy - ky) ** 2) / s2) * gt
                        for c in range(3):
                            num[c] += g * float(rgb[c])
                        den += g
                if den > 0:
                    out[iy, ix] = [v / den for v in num]
        outs.append(out)
    return outs


def oracle_3d(video: SparseVideo, params: EfanParams, fallback: Color = (0, 0, 0)) -> list[DenseFrame]:
    return [to_dense(v, fallback) for v in oracle_3d_values(video, params)]

