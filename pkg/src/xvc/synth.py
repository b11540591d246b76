"""Deterministic synthetic videos covering distinct motion regimes.

Textures are white noise blurred by a Gaussian of ``blur`` pixels (periodic
boundaries, so translated textures wrap seamlessly) and stretched per channel
to the full 8-bit range.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import DenseFrame

DEFAULT_BLUR = 6.0


def texture(width: int, height: int, seed: int, blur: float = DEFAULT_BLUR,
            contrast: float = 255.0) -> np.ndarray:
    """Blurred noise stretched per channel to ``contrast`` levels around a random mean."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width, 3))
    smooth = gaussian_filter(noise, sigma=(blur, blur, 0), mode="wrap") if blur > 0 else noise
    lo = smooth.min(axis=(0, 1))
    span = np.maximum(smooth.max(axis=(0, 1)) - lo, 1e-12)
    base = rng.uniform(0, 255 - contrast, size=3) if contrast < 255 else np.zeros(3)
    return np.rint(base + (smooth - lo) / span * contrast).astype(np.uint8)


def gen_static(width: int, height: int, frames: int, seed: int, blur: float = DEFAULT_BLUR) -> list[DenseFrame]:
    frame = DenseFrame(texture(width, height, seed, blur))
    return [frame] * frames


def gen_moving_texture(width: int, height: int, frames: int, velocity: tuple[int, int], seed: int,
                       blur: float = DEFAULT_BLUR) -> list[DenseFrame]:
    """Texture translated by ``velocity`` = (vx, vy) pixels per frame, wrapping."""
    base = texture(width, height, seed, blur)
    vx, vy = velocity
    return [DenseFrame(np.roll(base, (vy * l, vx * l), axis=(0, 1))) for l in range(frames)]


def gen_mixed(width: int, height: int, frames: int, seed: int, patch: int = 64,
              velocity: tuple[int, int] = (6, 0), blur: float = DEFAULT_BLUR) -> list[DenseFrame]:
    """Static background with a textured square patch moving across it (wrapping)."""
    background = texture(width, height, seed, blur)
    sprite = texture(patch, patch, seed + 1, blur / 2)
    vx, vy = velocity
    x0, y0 = width // 4, height // 4
    ys = np.arange(patch)
    xs = np.arange(patch)
    out = []
    for l in range(frames):
        img = background.copy()
        py = (y0 + vy * l + ys) % height
        px = (x0 + vx * l + xs) % width
        img[np.ix_(py, px)] = sprite
        out.append(DenseFrame(img))
    return out


def gen_flicker(width: int, height: int, frames: int, seed: int, amplitude: int = 24,
                blur: float = DEFAULT_BLUR) -> list[DenseFrame]:
    """Static texture under per-frame random illumination offsets.

    Each frame adds an independent per-channel offset drawn uniformly from
    [-amplitude, amplitude] (clipped to 8 bits), so the color distribution of
    every window changes by a random amount from one frame to the next.
    """
    base = texture(width, height, seed, blur).astype(np.int64)
    rng = np.random.default_rng([seed, 1])
    offsets = rng.integers(-amplitude, amplitude + 1, size=(frames, 3))
    return [DenseFrame(np.clip(base + off, 0, 255)) for off in offsets]
