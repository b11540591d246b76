"""Command-line pipeline: synth -> sample -> complete -> evaluate, plus calibrate and bench."""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import math
import os
import sys
import time
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import synth
from .adefan import AdefanParams, run_adefan
from .core import FrameError
from .efan import EfanParams, complete_video_2d, complete_video_3d, default_params, neighborhood_side
from .io import (ContainerError, ImageSequenceError, read_image_sequence, read_sparse,
                 write_image_sequence, write_sparse)
from .metrics import psnr_video
from .motion import CalibrationError, MotionParams, calibration_table, default_window_size
from .sampler import SamplingSpec, sample_video

log = logging.getLogger("xvc")

METHODS = ("efan2d", "efan3d", "adefan")
THREADS_ENV = "XVC_THREADS"

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_CALIBRATION = 4


class UsageError(Exception):
    pass


def fraction_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"sampling fraction must be in (0, 1], got {text}")
    return value


def fraction_list(text: str) -> list[float]:
    """'0.01,0.02,0.04' or a range 'start..stop[:step]' (step defaults to 0.01)."""
    try:
        if ".." in text:
            start, _, rest = text.partition("..")
            stop, _, step = rest.partition(":")
            a, b, s = Decimal(start), Decimal(stop), Decimal(step or "0.01")
            if s <= 0 or b < a:
                raise argparse.ArgumentTypeError(f"bad fraction range {text!r}")
            values, v = [], a
            while v <= b:
                values.append(float(v))
                v += s
        else:
            values = [float(Decimal(t)) for t in text.split(",") if t.strip()]
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"bad fraction list {text!r}") from None
    for v in values:
        fraction_arg(str(v))
    if not values:
        raise argparse.ArgumentTypeError("empty fraction list")
    return values


def method_list(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return methods


def int_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'vx,vy', got {text!r}") from None
    return a, b


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.6f}"


def write_csv(rows, header, out: str | None) -> None:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out is None or out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue())


# -- parameter assembly -----------------------------------------------------

def add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("algorithm parameters (defaults follow the method's published constants)")
    g.add_argument("--sigma", type=float, help="spatial Gaussian sigma in pixels (default sqrt(1/(f*pi)))")
    g.add_argument("--radius", type=int, help="spatial neighborhood half-width (default from sigma)")
    g.add_argument("--sigma-t", type=float, default=49 / 6, help="temporal Gaussian sigma in frames")
    g.add_argument("--temporal-halfwidth", type=int, default=49, help="efan3d frames on each side")
    g.add_argument("--alpha", type=float, default=0.95, help="histogram smoothing mix")
    g.add_argument("--beta", type=float, default=14.0, help="divergence impact on depth")
    g.add_argument("--fr-max", type=int, default=49, help="maximum depth per side (frames, incl. current)")
    g.add_argument("--window-size", type=int, help="motion window side (default by sampling rate)")
    g.add_argument("--window-stride", type=int, help="window stride (default half the window)")
    g.add_argument("--blend-ratio", type=float, default=6.0, help="blend sigma = window size / ratio")


def build_params(args, fraction: float) -> tuple[EfanParams, AdefanParams]:
    base = default_params(fraction)
    sigma = args.sigma if args.sigma is not None else base.sigma
    if args.radius is not None:
        radius = args.radius
    elif args.sigma is not None:
        radius = (neighborhood_side(sigma) - 1) // 2
    else:
        radius = base.radius
    efan = EfanParams(sigma, radius, args.sigma_t, args.temporal_halfwidth)
    motion = MotionParams(
        alpha=args.alpha, beta=args.beta, fr_max=args.fr_max,
        window_size=args.window_size or default_window_size(fraction),
    )
    return efan, AdefanParams(efan, motion, args.window_stride, args.blend_ratio)


def complete(video, method: str, efan: EfanParams, adefan: AdefanParams, threads: int):
    if method == "efan2d":
        return complete_video_2d(video, efan, threads=threads), None
    if method == "efan3d":
        return complete_video_3d(video, efan, threads=threads), None
    result = run_adefan(video, adefan, threads=threads)
    return result.frames, result.depths


# -- subcommands ------------------------------------------------------------

def synth_frames(args):
    w, h, n, seed = args.width, args.height, args.frames, args.seed
    if args.kind == "static":
        return synth.gen_static(w, h, n, seed, args.blur)
    if args.kind == "moving":
        return synth.gen_moving_texture(w, h, n, args.velocity, seed, args.blur)
    if args.kind == "mixed":
        return synth.gen_mixed(w, h, n, seed, velocity=args.velocity, blur=args.blur)
    return synth.gen_flicker(w, h, n, seed, blur=args.blur)


def cmd_synth(args) -> int:
    paths = write_image_sequence(synth_frames(args), args.out, args.format)
    log.info("wrote %d frames to %s", len(paths), args.out)
    return 0


def cmd_sample(args) -> int:
    frames = read_image_sequence(args.input, args.pattern)
    video = sample_video(frames, SamplingSpec(args.fraction, args.seed))
    size = write_sparse(video, args.out)
    log.info("sampled %d frames at f=%g, %d bytes -> %s", len(video), args.fraction, size, args.out)
    return 0


def cmd_complete(args) -> int:
    video = read_sparse(args.input)
    if args.dump_depths and args.method != "adefan":
        raise UsageError("--dump-depths only applies to --method adefan")
    efan, adefan = build_params(args, video.fraction)
    start = time.perf_counter()
    frames, depths = complete(video, args.method, efan, adefan, args.threads)
    log.info("%s: %d frames in %.2fs", args.method, len(frames), time.perf_counter() - start)
    write_image_sequence(frames, args.out, args.format)
    if args.dump_depths:
        rows = [
            (d.frame, win.x0, win.y0, int(f), int(b))
            for d in depths for win, f, b in zip(d.windows, d.forward, d.backward)
        ]
        write_csv(rows, ("frame", "window_x", "window_y", "depth_fwd", "depth_bwd"), args.dump_depths)
    return 0


def cmd_evaluate(args) -> int:
    ref = read_image_sequence(args.reference, args.pattern)
    test = read_image_sequence(args.test, args.pattern)
    try:
        report = psnr_video(ref, test)
    except ValueError as exc:
        raise UsageError(f"reference and test videos do not match: {exc}") from None
    rows = [(i, fmt(v)) for i, v in enumerate(report.per_frame)]
    rows += [("pooled", fmt(report.pooled)), ("mean", fmt(report.mean_video)), ("mse", fmt(report.mse_video))]
    write_csv(rows, ("frame_index", "psnr_db"), args.out)
    return 0


def cmd_calibrate(args) -> int:
    dense = read_image_sequence(args.input, args.pattern)
    if args.sparse:
        sparse = read_sparse(args.sparse)
    else:
        sparse = sample_video(dense, SamplingSpec(args.fraction, args.seed))
    table = calibration_table(dense, sparse, sorted(args.sizes), args.alpha)
    write_csv([(r["window_size"], fmt(r["mse"]), fmt(r["pearson_r"])) for r in table],
              ("window_size", "mse", "pearson_r"), args.out)
    chosen = [r["window_size"] for r in table if r["mse"] <= args.mse_max]
    if not chosen:
        listing = ", ".join(f"{r['window_size']}: {r['mse']:.4g}" for r in table)
        raise CalibrationError(f"no window size reaches MSE <= {args.mse_max} ({listing})", table)
    print(f"selected window size: {chosen[0]}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    if args.input:
        frames = read_image_sequence(args.input, args.pattern)
    else:
        frames = synth_frames(args)
    rows = []
    for f in args.fractions:
        video = sample_video(frames, SamplingSpec(f, args.seed))
        efan, adefan = build_params(args, f)
        for method in args.methods:
            start = time.perf_counter()
            out, _ = complete(video, method, efan, adefan, args.threads)
            report = psnr_video(frames, out)
            log.info("f=%g %s pooled %.3f dB (%.2fs)", f, method, report.pooled, time.perf_counter() - start)
            rows.append((method, f"{f:g}", fmt(report.pooled), fmt(report.mean_video), fmt(report.mse_video)))
    write_csv(rows, ("method", "fraction", "pooled_psnr_db", "mean_psnr_db", "mse"), args.out)
    return 0


def add_synth_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--kind", choices=("static", "moving", "mixed", "flicker"), default="mixed")
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=240)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--velocity", type=int_pair, default=(6, 0), help="vx,vy in pixels per frame")
    p.add_argument("--blur", type=float, default=synth.DEFAULT_BLUR, help="texture blur scale in pixels")
    if required:
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xvc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic test video as an image sequence")
    add_synth_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ppm", "png"), default="ppm")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="randomly sample frames into a sparse container")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fraction", type=fraction_arg, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pattern")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("complete", help="reconstruct dense frames from a sparse container")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=METHODS, default="adefan")
    p.add_argument("--format", choices=("ppm", "png"), default="ppm")
    p.add_argument("--dump-depths", metavar="CSV")
    p.add_argument("--threads", type=int, default=default_threads())
    add_param_flags(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("evaluate", help="per-frame and pooled PSNR as CSV")
    p.add_argument("--reference", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out")
    p.add_argument("--pattern")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("calibrate", help="sparse-vs-dense KL error per window size")
    p.add_argument("--in", dest="input", required=True, help="dense frames")
    p.add_argument("--sparse", help="sparse container of the same video (default: sample it)")
    p.add_argument("--fraction", type=fraction_arg, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", type=lambda t: [int(v) for v in t.split(",")], default=[80, 120, 160])
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--mse-max", type=float, default=0.2)
    p.add_argument("--out")
    p.add_argument("--pattern")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bench", help="PSNR sweep over sampling rates and methods")
    p.add_argument("--in", dest="input", help="dense frames (default: synthetic video)")
    p.add_argument("--pattern")
    add_synth_flags(p)
    p.add_argument("--fractions", type=fraction_list, default=fraction_list("0.01..0.08"))
    p.add_argument("--methods", type=method_list, default=list(METHODS))
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--out")
    add_param_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("xvc: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"xvc {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"xvc {args.command}: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (ContainerError, ImageSequenceError, FrameError, OSError) as exc:
        print(f"xvc {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"xvc {args.command}: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
