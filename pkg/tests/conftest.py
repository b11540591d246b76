import numpy as np
import pytest

from xvc.core import DenseFrame, SparseFrame, SparseVideo
from xvc.sampler import SamplingSpec, sample_video

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_frames(rng, width, height, count):
    return [DenseFrame(rng.integers(0, 256, (height, width, 3))) for _ in range(count)]


def random_sparse_video(rng, width, height, count, fraction):
    frames = random_frames(rng, width, height, count)
    return sample_video(frames, SamplingSpec(fraction, int(rng.integers(2**63))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def small_video(rng):
    return random_sparse_video(rng, 48, 40, 10, 0.05)


def single_sample(width, height, x, y, rgb):
    return SparseFrame.from_records(width, height, [(x, y, *rgb)])


def video_of(frames, fraction=1.0):
    return SparseVideo(frames[0].width, frames[0].height, frames, fraction, 0)
