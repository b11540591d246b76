"""Shared frame types and the accumulate-then-normalize convention.

All intermediate arithmetic is float64; frames are quantized to 8 bits only
when an accumulator is normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Color = tuple[int, int, int]


class FrameError(ValueError):
    """Raised when a frame or video violates its structural invariants."""


@dataclass(frozen=True, eq=False)
class DenseFrame:
    """Full H x W x 3 uint8 RGB frame."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise FrameError(f"dense frame must be H x W x 3, got {data.shape}")
        if data.dtype != np.uint8:
            if data.size and (data.min() < 0 or data.max() > 255):
                raise FrameError("intensities must lie in [0, 255]")
            data = data.astype(np.uint8)
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DenseFrame):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    @classmethod
    def filled(cls, width: int, height: int, color: Color = (0, 0, 0)) -> "DenseFrame":
        data = np.empty((height, width, 3), dtype=np.uint8)
        data[:] = color
        return cls(data)


@dataclass(frozen=True, eq=False)
class SparseFrame:
    """Known samples of one frame.

    Samples are stored in canonical (y, x) raster order. Every consumer that
    accumulates floats relies on this order, so it is enforced here rather
    than trusted from the caller.
    """

    width: int
    height: int
    xs: np.ndarray
    ys: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise FrameError("frame dimensions must be positive")
        xs = np.asarray(self.xs, dtype=np.int64).reshape(-1)
        ys = np.asarray(self.ys, dtype=np.int64).reshape(-1)
        colors = np.asarray(self.colors)
        if colors.size == 0:
            colors = colors.reshape(0, 3)
        if colors.ndim != 2 or colors.shape[1] != 3 or len(colors) != len(xs) or len(ys) != len(xs):
            raise FrameError("samples need matching x, y and (n, 3) colors")
        if colors.size and (colors.min() < 0 or colors.max() > 255):
            raise FrameError("sample intensities must lie in [0, 255]")
        if len(xs) and (xs.min() < 0 or xs.max() >= self.width or ys.min() < 0 or ys.max() >= self.height):
            raise FrameError("sample coordinates outside the frame")
        flat = ys * self.width + xs
        order = np.argsort(flat, kind="stable")
        flat = flat[order]
        if len(flat) > 1 and np.any(flat[1:] == flat[:-1]):
            raise FrameError("duplicate sample coordinates")
        for name, arr in (("xs", xs[order]), ("ys", ys[order]), ("colors", colors[order].astype(np.uint8))):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.xs)

    def __eq__(self, other):
        if not isinstance(other, SparseFrame):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.colors, other.colors)
        )

    @classmethod
    def from_records(cls, width: int, height: int, records) -> "SparseFrame":
        """Build from an iterable of (x, y, r, g, b) tuples."""
        arr = np.asarray(list(records), dtype=np.int64).reshape(-1, 5)
        return cls(width, height, arr[:, 0], arr[:, 1], arr[:, 2:])

    def records(self) -> list[tuple[int, int, int, int, int]]:
        return [
            (int(x), int(y), int(c[0]), int(c[1]), int(c[2]))
            for x, y, c in zip(self.xs, self.ys, self.colors)
        ]


@dataclass(frozen=True, eq=False)
class SparseVideo:
    width: int
    height: int
    frames: tuple[SparseFrame, ...] = ()
    fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        frames = tuple(self.frames)
        for i, fr in enumerate(frames):
            if fr.width != self.width or fr.height != self.height:
                raise FrameError(
                    f"frame {i} is {fr.width}x{fr.height}, video is {self.width}x{self.height}"
                )
        if not 0 < self.fraction <= 1:
            raise FrameError(f"sampling fraction must be in (0, 1], got {self.fraction}")
        if not 0 <= self.seed < 2**64:
            raise FrameError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    def __iter__(self):
        return iter(self.frames)

    def __eq__(self, other):
        if not isinstance(other, SparseVideo):
            return NotImplemented
        return (
            (self.width, self.height, self.fraction, self.seed)
            == (other.width, other.height, other.fraction, other.seed)
            and self.frames == other.frames
        )


@dataclass
class AccumulatorPlane:
    """Weighted intensity sums (numer) and weight sums (denom) for one frame."""

    width: int
    height: int
    numer: np.ndarray = field(default=None)
    denom: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.numer is None:
            self.numer = np.zeros((self.height, self.width, 3), dtype=np.float64)
        if self.denom is None:
            self.denom = np.zeros((self.height, self.width), dtype=np.float64)
        if self.numer.shape != (self.height, self.width, 3) or self.denom.shape != (self.height, self.width):
            raise FrameError("accumulator planes do not match the frame size")

    def merge(self, other: "AccumulatorPlane") -> None:
        self.numer += other.numer
        self.denom += other.denom

    def values(self) -> np.ndarray:
        """Unquantized numer/denom; NaN where no weight arrived."""
        return ratio(self.numer, self.denom)


def ratio(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    out = np.full(numer.shape, np.nan)
    hit = denom > 0
    out[hit] = numer[hit] / denom[hit][:, None]
    return out


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp to uint8."""
    values = np.asarray(values, dtype=np.float64)
    lo = np.floor(values)
    out = np.where(values - lo >= 0.5, lo + 1.0, lo)
    return np.clip(out, 0, 255).astype(np.uint8)


def to_dense(values: np.ndarray, fallback: Color = (0, 0, 0)) -> DenseFrame:
    """Quantize an H x W x 3 float image; NaN pixels take ``fallback``."""
    empty = np.isnan(values).any(axis=2)
    out = quantize(np.where(np.isnan(values), 0.0, values))
    out[empty] = fallback
    return DenseFrame(out)


def normalize(acc: AccumulatorPlane, fallback: Color = (0, 0, 0)) -> DenseFrame:
    return to_dense(acc.values(), fallback)
