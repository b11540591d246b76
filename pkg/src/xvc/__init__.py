"""Extreme video completion from sparse random pixel samples."""

from .adefan import AdefanParams, complete_video_adefan, run_adefan
from .core import AccumulatorPlane, DenseFrame, SparseFrame, SparseVideo, normalize
from .efan import EfanParams, complete_frame_2d, complete_video_2d, complete_video_3d, default_params
from .metrics import psnr, psnr_video
from .motion import MotionParams, depth_from_divergence, smoothed_kl
from .sampler import SamplingSpec, sample_frame, sample_video

__version__ = "0.1.0"
