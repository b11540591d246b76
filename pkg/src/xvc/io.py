"""Image-sequence I/O and the binary sparse-video container.

Container layout (little endian)::

    header   magic "XVC1" | version u16 | width u16 | height u16
             | frame_count u32 | fraction f64 | seed u64          (30 bytes)
    frame    sample_count u32, then sample_count records of
             x u16 | y u16 | r u8 | g u8 | b u8                   (7 bytes each)

Records inside a frame are sorted by (y, x) with no duplicates.
"""

from __future__ import annotations

import os
import re
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import DenseFrame, FrameError, SparseFrame, SparseVideo

MAGIC = b"XVC1"
VERSION = 1
HEADER = struct.Struct("<4sHHHIdQ")
COUNT = struct.Struct("<I")
RECORD = np.dtype([("x", "<u2"), ("y", "<u2"), ("r", "u1"), ("g", "u1"), ("b", "u1")])

IMAGE_SUFFIXES = (".ppm", ".png")


class ContainerError(ValueError):
    pass


class ImageSequenceError(ValueError):
    pass


def encode_sparse(video: SparseVideo) -> bytes:
    if not (0 < video.width < 2**16 and 0 < video.height < 2**16):
        raise ContainerError("container dimensions must be in [1, 65535]")
    parts = [HEADER.pack(MAGIC, VERSION, video.width, video.height, len(video), video.fraction, video.seed)]
    for fr in video:
        rec = np.empty(len(fr), dtype=RECORD)
        rec["x"], rec["y"] = fr.xs, fr.ys
        rec["r"], rec["g"], rec["b"] = fr.colors.T
        parts.append(COUNT.pack(len(fr)))
        parts.append(rec.tobytes())
    return b"".join(parts)


def decode_sparse(buf: bytes) -> SparseVideo:
    if len(buf) < HEADER.size:
        raise ContainerError(f"truncated header: {len(buf)} of {HEADER.size} bytes")
    magic, version, width, height, count, fraction, seed = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ContainerError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    if width == 0 or height == 0:
        raise ContainerError("zero frame dimension")
    pos = HEADER.size
    frames = []
    for i in range(count):
        if pos + COUNT.size > len(buf):
            raise ContainerError(f"truncated payload in frame {i} header")
        (n,) = COUNT.unpack_from(buf, pos)
        pos += COUNT.size
        end = pos + n * RECORD.itemsize
        if end > len(buf):
            raise ContainerError(f"truncated payload in frame {i}: need {end - len(buf)} more bytes")
        rec = np.frombuffer(buf, dtype=RECORD, count=n, offset=pos)
        pos = end
        flat = rec["y"].astype(np.int64) * width + rec["x"]
        if n > 1 and np.any(np.diff(flat) <= 0):
            raise ContainerError(f"frame {i}: samples unsorted or duplicated")
        try:
            frames.append(SparseFrame(width, height, rec["x"], rec["y"],
                                      np.stack([rec["r"], rec["g"], rec["b"]], axis=1)))
        except FrameError as exc:
            raise ContainerError(f"frame {i}: {exc}") from exc
    if pos != len(buf):
        raise ContainerError(f"{len(buf) - pos} trailing bytes after last frame")
    try:
        return SparseVideo(width, height, frames, fraction, seed)
    except FrameError as exc:
        raise ContainerError(str(exc)) from exc


def write_sparse(video: SparseVideo, path) -> int:
    data = encode_sparse(video)
    Path(path).write_bytes(data)
    return len(data)


def read_sparse(path) -> SparseVideo:
    return decode_sparse(Path(path).read_bytes())


# -- raster frames ---------------------------------------------------------

_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def decode_ppm(buf: bytes) -> DenseFrame:
    """Binary (P6) or ASCII (P3) PPM with maxval <= 255."""
    tokens, pos = [], 0
    while len(tokens) < 4:
        m = _PNM_TOKEN.match(buf, pos)
        if m is None:
            raise ImageSequenceError("truncated PPM header")
        tokens.append(m.group(1))
        pos = m.end()
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageSequenceError("malformed PPM header") from None
    if magic not in (b"P6", b"P3") or not 0 < maxval <= 255 or width <= 0 or height <= 0:
        raise ImageSequenceError(f"unsupported PPM ({magic!r}, maxval {maxval})")
    n = width * height * 3
    if magic == b"P6":
        pixels = np.frombuffer(buf, dtype=np.uint8, count=n, offset=pos + 1) if len(buf) >= pos + 1 + n else None
    else:
        values = buf[pos:].split()
        pixels = np.array([int(v) for v in values[:n]], dtype=np.int64) if len(values) >= n else None
    if pixels is None:
        raise ImageSequenceError("truncated PPM pixel data")
    data = pixels.reshape(height, width, 3).astype(np.int64)
    if maxval != 255:
        data = (data * 255 + maxval // 2) // maxval
    return DenseFrame(data.astype(np.uint8))


def encode_ppm(frame: DenseFrame) -> bytes:
    return b"P6\n%d %d\n255\n" % (frame.width, frame.height) + frame.data.tobytes()


def read_image(path) -> DenseFrame:
    path = Path(path)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError:
            raise ImageSequenceError("PNG support needs Pillow (pip install 'artifact[png]')") from None
        with Image.open(path) as im:
            return DenseFrame(np.asarray(im.convert("RGB")))
    return decode_ppm(path.read_bytes())


def write_image(frame: DenseFrame, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError:
            raise ImageSequenceError("PNG support needs Pillow (pip install 'artifact[png]')") from None
        Image.fromarray(frame.data).save(path, optimize=False)
    else:
        path.write_bytes(encode_ppm(frame))


def list_frames(directory, pattern: str | None = None) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ImageSequenceError(f"not a directory: {directory}")
    if pattern:
        files = sorted(p for p in directory.glob(pattern) if p.is_file())
    else:
        files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ImageSequenceError(f"no frames found in {directory}")
    return files


def read_image_sequence(directory, pattern: str | None = None) -> list[DenseFrame]:
    frames = []
    for path in list_frames(directory, pattern):
        try:
            frame = read_image(path)
        except (ImageSequenceError, OSError) as exc:
            raise ImageSequenceError(f"{path.name}: {exc}") from exc
        if frames and frame.data.shape != frames[0].data.shape:
            raise ImageSequenceError(
                f"{path.name}: {frame.width}x{frame.height} differs from {frames[0].width}x{frames[0].height}"
            )
        frames.append(frame)
    return frames


def write_image_sequence(frames: Iterable[DenseFrame], directory, fmt: str = "ppm",
                         prefix: str = "frame_") -> list[Path]:
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = directory / f"{prefix}{i:05d}.{fmt}"
        write_image(frame, path)
        paths.append(path)
    return paths

