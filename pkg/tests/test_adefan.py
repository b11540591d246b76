import math

import numpy as np
import pytest

from conftest import random_frames, video_of
from xvc.adefan import (AdefanParams, assemble_frame, blend_weights, complete_video_adefan,
                        complete_video_windowed, complete_window, compute_depth_fields, run_adefan)
from xvc.core import DenseFrame, quantize
from xvc.efan import EfanParams, complete_video_2d, complete_video_3d_values, default_params, splat_frame
from xvc.metrics import psnr_video
from xvc.motion import MotionParams, Window, depth_from_divergence
from xvc.sampler import SamplingSpec, sample_frame, sample_video
from xvc.synth import gen_mixed, gen_static


def small_params(fraction=0.05, **motion):
    motion.setdefault("window_size", 32)
    return AdefanParams(default_params(fraction), MotionParams(**motion))


@pytest.fixture
def mixed_video():
    frames = gen_mixed(64, 48, 12, seed=4, patch=16, velocity=(3, 0))
    return sample_video(frames, SamplingSpec(0.05, 8))


def test_params_defaults_and_validation():
    p = AdefanParams.for_fraction(0.01)
    assert p.motion.window_size == 160 and p.stride == 80
    assert (p.motion.alpha, p.motion.beta, p.motion.fr_max) == (0.95, 14.0, 49)
    assert p.blend_sigma_ratio == 6.0
    with pytest.raises(ValueError):
        AdefanParams(default_params(0.01), MotionParams(window_size=32), window_stride=33)
    with pytest.raises(ValueError):
        AdefanParams(default_params(0.01), blend_sigma_ratio=0)


def test_blend_weight_center_and_corner():
    for size in (32, 80, 160):
        w = blend_weights(Window(0, 0, size, size, size))
        assert w[size // 2, size // 2] == 1.0
        assert w[0, 0] == pytest.approx(math.exp(-9), rel=1e-12)


def test_depth_one_window_is_2d_crop(mixed_video):
    p = small_params()
    full = splat_frame(mixed_video[5], p.efan).values()
    win = Window(16, 16, 48, 48, 32)
    values, weights = complete_window(mixed_video, 5, win, 1, 1, p)
    assert np.array_equal(values, full[win.region], equal_nan=True)
    assert np.all(weights[~np.isnan(values).any(axis=2)] > 0)


def test_max_depth_identical_masks_is_3d(rng):
    frame = DenseFrame(rng.integers(0, 256, (40, 40, 3)))
    sp = sample_frame(frame, SamplingSpec(0.05, 1), 0)
    video = video_of([sp] * 6, 0.05)
    p = small_params(fr_max=6)
    three_d = complete_video_3d_values(video, p.efan)
    win = Window(0, 0, 32, 32, 32)
    values, _ = complete_window(video, 2, win, 6, 6, p)
    np.testing.assert_allclose(values, three_d[2][win.region], atol=1e-9)
    assert np.array_equal(quantize(values), quantize(three_d[2][win.region]))


def test_depth_out_of_range(mixed_video):
    with pytest.raises(ValueError):
        complete_window(mixed_video, 0, Window(0, 0, 32, 32, 32), 0, 1, small_params())


def test_unreachable_pixels_get_zero_weight():
    empty = sample_video([DenseFrame.filled(40, 40)], SamplingSpec(1 / 1600, 0))
    p = AdefanParams(EfanParams(1.0, 2), MotionParams(window_size=40))
    values, weights = complete_window(empty, 0, Window(0, 0, 40, 40, 40), 1, 1, p)
    assert np.all(weights[np.isnan(values).any(axis=2)] == 0)
    assert np.isnan(values).any()


def test_assemble_single_window():
    win = Window(0, 0, 4, 3, 4)
    values = np.random.default_rng(1).uniform(0, 255, (3, 4, 3))
    out = assemble_frame([(win, values, blend_weights(win))], 4, 3)
    assert np.array_equal(out.data, quantize(values))


def test_assemble_identical_windows():
    a, b = Window(0, 0, 6, 4, 6), Window(2, 0, 8, 4, 6)
    content = np.random.default_rng(2).uniform(0, 255, (4, 8, 3))
    parts = [(w, content[w.region], blend_weights(w)) for w in (a, b)]
    assert np.array_equal(assemble_frame(parts, 8, 4).data, quantize(content))


def test_assemble_between_contents():
    a, b = Window(0, 0, 6, 6, 6), Window(3, 0, 9, 6, 6)
    parts = [(a, np.full((6, 6, 3), 10.0), blend_weights(a)), (b, np.full((6, 6, 3), 200.0), blend_weights(b))]
    out = assemble_frame(parts, 9, 6, fallback=(1, 1, 1)).data.astype(int)
    shared = out[:, 3:6]
    assert np.all((shared > 10) & (shared < 200))
    assert np.all(out[:, :3] == 10) and np.all(out[:, 6:] == 200)


def test_assemble_fallback_for_zero_weight():
    win = Window(0, 0, 2, 2, 2)
    out = assemble_frame([(win, np.full((2, 2, 3), np.nan), np.zeros((2, 2)))], 3, 2, fallback=(7, 8, 9))
    assert np.all(out.data == (7, 8, 9))


def test_depth_fields_follow_depth_formula(mixed_video):
    p = small_params()
    fields = compute_depth_fields(mixed_video, p)
    assert len(fields) == len(mixed_video)
    for fld in fields:
        for d, depth in zip(fld.div_forward, fld.forward):
            assert depth == depth_from_divergence(d, p.motion.fr_max, p.motion.beta)
        assert np.all((1 <= fld.forward) & (fld.forward <= p.motion.fr_max))
    # no frame after the last one: no observed motion, maximal forward depth
    assert np.all(fields[-1].forward == p.motion.fr_max)
    assert np.all(fields[0].backward == p.motion.fr_max)


def test_static_video_depths_large():
    frames = gen_static(64, 64, 10, seed=2, blur=10)
    frames = [DenseFrame(fr.data // 8 + 100) for fr in frames]
    video = sample_video(frames, SamplingSpec(0.2, 3))
    fields = compute_depth_fields(video, small_params(0.2))
    depths = np.concatenate([f.forward for f in fields] + [f.backward for f in fields])
    # sparse histograms of a static scene still differ by sampling noise
    assert depths.min() >= 10 and np.median(depths) >= 15


def test_noise_video_depths_small(rng):
    video = sample_video(random_frames(rng, 64, 64, 10), SamplingSpec(0.2, 3))
    fields = compute_depth_fields(video, small_params(0.2))
    inner = np.concatenate([f.forward for f in fields[:-1]] + [f.backward for f in fields[1:]])
    assert inner.max() <= 3


def test_first_frame_backward_extent_clips(mixed_video):
    p = small_params()
    win = Window(0, 0, 32, 32, 32)
    a, _ = complete_window(mixed_video, 0, win, 1, p.motion.fr_max, p)
    b, _ = complete_window(mixed_video, 0, win, 1, 1, p)
    assert np.array_equal(a, b, equal_nan=True)


def test_forced_depth_one_is_windowed_2d(mixed_video):
    p = small_params()
    assert complete_video_adefan(mixed_video, p, depth_override=1) == complete_video_windowed(mixed_video, p, 0)


@pytest.mark.parametrize("fr_max", [3, 49])
def test_zero_beta_is_windowed_max_depth_3d(mixed_video, fr_max):
    p = small_params(beta=0.0, fr_max=fr_max)
    assert complete_video_adefan(mixed_video, p) == complete_video_windowed(mixed_video, p, fr_max - 1)


def test_scaling_divergence_never_deepens(mixed_video):
    p = small_params()
    base = compute_depth_fields(mixed_video, p)
    for lam in (1.5, 4.0):
        scaled = compute_depth_fields(mixed_video, p, div_scale=lam)
        for a, b in zip(base, scaled):
            assert np.all(b.forward <= a.forward) and np.all(b.backward <= a.backward)


def test_deterministic_across_threads(mixed_video):
    p = small_params()
    one = run_adefan(mixed_video, p, threads=1).frames
    many = run_adefan(mixed_video, p, threads=4).frames
    again = run_adefan(mixed_video, p, threads=1).frames
    assert one == many == again


def test_output_in_sample_hull(rng):
    frames = [DenseFrame(rng.integers(60, 90, (32, 32, 3))) for _ in range(5)]
    video = sample_video(frames, SamplingSpec(0.1, 2))
    out = complete_video_adefan(video, small_params(0.1, window_size=16))
    lo = min(int(fr.colors.min()) for fr in video)
    hi = max(int(fr.colors.max()) for fr in video)
    assert all(fr.data.min() >= lo and fr.data.max() <= hi for fr in out)


def test_static_100_frames_beats_2d():
    frames = gen_static(160, 120, 100, seed=9)
    video = sample_video(frames, SamplingSpec(0.01, 1))
    p = AdefanParams.for_fraction(0.01)
    ad = complete_video_adefan(video, p)
    e2 = complete_video_2d(video, p.efan)
    mid = slice(25, 75)
    assert psnr_video(frames[mid], ad[mid]).pooled >= psnr_video(frames[mid], e2[mid]).pooled
