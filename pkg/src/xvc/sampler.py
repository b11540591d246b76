"""Deterministic uniform random pixel sampling.

Generator
---------
SplitMix64 (Steele, Lea & Flood 2014; reference C code by S. Vigna,
https://prng.di.unimi.it/splitmix64.c)::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

all arithmetic mod 2**64. The stream for frame ``i`` of a video sampled with
``seed`` starts from state ``mix64(seed ^ mix64(i))`` where ``mix64`` is the
output function above applied to its argument directly (no increment).

Bounded draws in ``[0, n)`` use Lemire's multiply-shift with rejection
(https://arxiv.org/abs/1805.10941). Positions come from a partial
Fisher-Yates shuffle over raster indices ``y * W + x``; the first
``round_half_up(f * W * H)`` entries are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .core import DenseFrame, FrameError, SparseFrame, SparseVideo

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, state: int):
        self.state = state & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def __iter__(self) -> Iterator[int]:
        while True:
            yield self.next()

    def bounded(self, n: int) -> int:
        """Uniform integer in [0, n) (Lemire, unbiased)."""
        m = self.next() * n
        low = m & MASK64
        if low < n:
            threshold = (-n) % n
            while low < threshold:
                m = self.next() * n
                low = m & MASK64
        return m >> 64


def frame_stream(seed: int, frame_index: int) -> SplitMix64:
    return SplitMix64(mix64(seed ^ mix64(frame_index)))


@dataclass(frozen=True)
class SamplingSpec:
    fraction: float
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.fraction, (int, float)) and 0 < self.fraction <= 1):
            raise ValueError(f"sampling fraction must be in (0, 1], got {self.fraction!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def sample_count(fraction: float, width: int, height: int) -> int:
    """round(f * W * H), halves rounded up."""
    return int(math.floor(fraction * width * height + 0.5))


def choose_positions(rng: SplitMix64, total: int, n: int) -> list[int]:
    """First n entries of a Fisher-Yates shuffle of range(total)."""
    swapped: dict[int, int] = {}
    out = []
    for i in range(n):
        j = i + rng.bounded(total - i)
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        swapped[j] = vi
        out.append(vj)
    return out


def sample_frame(frame: DenseFrame, spec: SamplingSpec, frame_index: int) -> SparseFrame:
    w, h = frame.width, frame.height
    n = sample_count(spec.fraction, w, h)
    idx = choose_positions(frame_stream(spec.seed, frame_index), w * h, n)
    ys = [i // w for i in idx]
    xs = [i % w for i in idx]
    return SparseFrame(w, h, xs, ys, frame.data[ys, xs] if idx else [])


def sample_video(video: Sequence[DenseFrame], spec: SamplingSpec,
                 width: int | None = None, height: int | None = None) -> SparseVideo:
    """Sample every frame with its own sub-stream.

    ``width``/``height`` only matter for an empty ``video`` (the header still
    needs dimensions).
    """
    frames = list(video)
    if frames:
        width, height = frames[0].width, frames[0].height
        for i, fr in enumerate(frames):
            if (fr.width, fr.height) != (width, height):
                raise FrameError(
                    f"frame {i} is {fr.width}x{fr.height}, expected {width}x{height}"
                )
    elif width is None or height is None:
        width, height = 1, 1
    sparse = [sample_frame(fr, spec, i) for i, fr in enumerate(frames)]
    return SparseVideo(width, height, sparse, spec.fraction, spec.seed)
