"""PSNR for frames and videos."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DenseFrame

PEAK = 255.0


def mse(reference: DenseFrame, test: DenseFrame) -> float:
    if reference.data.shape != test.data.shape:
        raise ValueError(f"frame shapes differ: {reference.data.shape} vs {test.data.shape}")
    diff = reference.data.astype(np.float64) - test.data.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_from_mse(err: float) -> float:
    if err == 0:
        return math.inf
    return 10 * math.log10(PEAK * PEAK / err)


def psnr(reference: DenseFrame, test: DenseFrame) -> float:
    return psnr_from_mse(mse(reference, test))


@dataclass
class PsnrReport:
    per_frame: list[float]
    mse_video: float

    @property
    def pooled(self) -> float:
        """PSNR of the MSE pooled over every frame; the headline number."""
        return psnr_from_mse(self.mse_video)

    @property
    def mean_video(self) -> float:
        """Mean of the per-frame PSNRs."""
        if not self.per_frame:
            return math.nan
        return float(np.mean(self.per_frame))


def psnr_video(reference: Sequence[DenseFrame], test: Sequence[DenseFrame]) -> PsnrReport:
    if len(reference) != len(test):
        raise ValueError(f"frame counts differ: {len(reference)} vs {len(test)}")
    errs = [mse(r, t) for r, t in zip(reference, test)]
    pooled = float(np.mean(errs)) if errs else math.nan
    return PsnrReport([psnr_from_mse(e) for e in errs], pooled)
