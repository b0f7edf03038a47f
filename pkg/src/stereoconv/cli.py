"""Command-line entry point.

Exit codes: 0 success, 2 input error, 3 config error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .core import ConfigError, InputError, NumericError, StereoError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

logger = logging.getLogger("stereoconv")


def _frame_index(path) -> int:
    stem = Path(path).stem
    return int(stem) if stem.isdigit() else 0


# ---------------------------------------------------------------------------
# subcommands; each takes (args, cfg) and returns an exit code
# ---------------------------------------------------------------------------


def cmd_warp(args, cfg):
    from .io import read_disparity, read_frame, write_frame
    from .warp import forward_warp

    res = forward_warp(read_frame(args.frame), read_disparity(args.disparity))
    write_frame(res.warped, args.out)
    if args.mask_out:
        _write_mask(res.mask.bits, args.mask_out)
    return EXIT_OK


def _write_mask(bits: np.ndarray, path) -> None:
    from PIL import Image

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(bits.astype(np.uint8) * 255, "L").save(path)


def cmd_expand(args, cfg):
    from .disparity import canny_edges, expand_disparity
    from .io import read_disparity, write_disparity

    disp = read_disparity(args.disparity)
    edges = canny_edges(disp, cfg.canny_sigma, cfg.canny_low, cfg.canny_high, cfg.canny_relative)
    out = expand_disparity(disp, cfg.expand_radius, cfg.expand_threshold, edges=edges, mirrored=cfg.expand_mirrored)
    write_disparity(out, args.out)
    if args.edges_out:
        _write_mask(edges.bits, args.edges_out)
    return EXIT_OK


def cmd_inpaint(args, cfg):
    from .inpaint import inpaint_de, inpaint_fallback, inpaint_poly, load_external_inpaint
    from .io import read_disparity, read_frame, write_frame
    from .warp import forward_warp

    frame, disp = read_frame(args.frame), read_disparity(args.disparity)
    if args.branch == "poly":
        out = inpaint_poly(frame, disp)
    elif args.branch == "de":
        out = inpaint_de(frame, disp, cfg)
    else:
        warp = forward_warp(frame, disp)
        if args.branch == "fallback":
            out = inpaint_fallback(warp.warped, warp.mask, cfg.fill_tolerance, cfg.fill_max_iter)
        else:
            if not cfg.external_dir:
                raise InputError("--branch external needs --external-dir")
            index = args.index if args.index is not None else _frame_index(args.frame)
            ext = load_external_inpaint(cfg.external_dir, index, (frame.width, frame.height))
            from .core import Frame

            out = Frame(np.where(warp.mask.bits[..., None], ext.pixels, warp.warped.pixels))
    write_frame(out, args.out)
    return EXIT_OK


def cmd_refine(args, cfg):
    from .io import read_frame, write_frame
    from .refiner import load_weights, refiner_forward

    path = args.weights or cfg.weights_path
    if not path:
        raise ConfigError("refine needs --weights")
    res = refiner_forward(read_frame(args.ip), read_frame(args.ie), read_frame(args.il), load_weights(path))
    if not np.isfinite(res.output.pixels).all():
        raise NumericError("refiner produced non-finite output")
    write_frame(res.output, args.out)
    return EXIT_OK


def cmd_train(args, cfg):
    from .refiner import save_weights
    from .refiner.train import train_refiner

    if args.synthetic:
        from .synthetic import training_samples

        samples = training_samples(args.synthetic, args.size, cfg.seed, cfg)
    elif args.input:
        from .pipeline import branch_samples

        samples = branch_samples(args.input, cfg)
    else:
        raise InputError("train needs --input DIR or --synthetic N")
    result = train_refiner(samples, cfg, seed=cfg.seed, steps=args.steps)
    save_weights(result.weights, args.out)
    if args.trace:
        header = "step total content perceptual adversarial"
        rows = np.column_stack([np.arange(len(result.trace)), result.trace])
        np.savetxt(args.trace, rows, fmt=["%d"] + ["%.17g"] * 4, header=header, comments="")
    print(f"content loss {result.initial_content:.6g} -> {result.final_content:.6g}")
    return EXIT_OK


def cmd_metrics(args, cfg):
    from .metrics import evaluate_sequence

    stride = args.stride if args.stride is not None else cfg.eval_stride
    score = evaluate_sequence(args.pred, args.gt, stride, jobs=cfg.jobs)
    lines = "\n".join(f.line() for f in score.frames) + "\n"
    if args.format == "lines":
        sys.stdout.write(lines)
    else:
        print(score.table())
    if args.out:
        Path(args.out).write_text(lines)
    return EXIT_OK


def cmd_compose(args, cfg):
    from .io import read_frame, write_frame
    from .warp import compose_anaglyph, compose_sbs

    left, right = read_frame(args.left), read_frame(args.right)
    out = compose_sbs(left, right) if args.mode == "sbs" else compose_anaglyph(left, right)
    write_frame(out, args.out)
    return EXIT_OK


def cmd_split(args, cfg):
    from .io import read_frame, write_frame
    from .warp import split_sbs

    left, right = split_sbs(read_frame(args.input))
    write_frame(left, args.left_out)
    write_frame(right, args.right_out)
    return EXIT_OK


def cmd_manifest(args, cfg):
    from .io import make_manifest

    entries = make_manifest(args.dirs, args.train, args.test, cfg.seed, path=args.out, root=args.root)
    print(f"{sum(1 for s, _ in entries if s == 'train')} train, {sum(1 for s, _ in entries if s == 'test')} test")
    return EXIT_OK


def cmd_convert(args, cfg):
    from .pipeline import run_pipeline

    report = run_pipeline(cfg, args.input, args.output, args.variant)
    print(f"wrote {len(report.outputs)} frames to {Path(args.output) / 'right'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stereoconv", description="Convert monocular frames to stereo pairs.")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="RNG seed (training, manifests)")
    p.add_argument("--jobs", type=int, help="worker threads for frame-parallel commands")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("warp", help="forward-warp a frame, leaving holes")
    s.add_argument("--frame", required=True)
    s.add_argument("--disparity", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mask-out")
    s.set_defaults(func=cmd_warp)

    s = sub.add_parser("expand-disparity", help="expand disparity around depth edges")
    s.add_argument("--disparity", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--k", type=int, dest="expand_radius")
    s.add_argument("--lambda", "--lam", type=float, dest="expand_threshold")
    s.add_argument("--canny-sigma", type=float, dest="canny_sigma")
    s.add_argument("--canny-low", type=float, dest="canny_low")
    s.add_argument("--canny-high", type=float, dest="canny_high")
    s.add_argument("--edges-out")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("inpaint", help="run one inpainting branch")
    s.add_argument("--frame", required=True)
    s.add_argument("--disparity", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--branch", choices=("poly", "de", "fallback", "external"), default="poly")
    s.add_argument("--external-dir", dest="external_dir")
    s.add_argument("--index", type=int)
    s.set_defaults(func=cmd_inpaint)

    s = sub.add_parser("refine", help="fuse three branch outputs with a trained refiner")
    for name in ("ip", "ie", "il"):
        s.add_argument(f"--{name}", required=True)
    s.add_argument("--weights")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_refine)

    s = sub.add_parser("train", help="train refiner weights")
    s.add_argument("--input", help="directory with left/, disparity/ and right/")
    s.add_argument("--synthetic", type=int, help="train on N synthetic bar scenes")
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--steps", type=int)
    s.add_argument("--channels", type=lambda v: tuple(int(c) for c in v.split(",")))
    s.add_argument("--batch-size", type=int, dest="batch_size")
    s.add_argument("--alpha", type=float)
    for i in (1, 2, 3):
        s.add_argument(f"--lambda{i}", type=float)
    s.add_argument("--no-adversarial", action="store_false", default=None, dest="adversarial")
    s.add_argument("--out", required=True, help="weights file to write")
    s.add_argument("--trace", help="write the per-step loss trace here")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("metrics", help="MAE/PSNR/SSIM over two frame directories")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--stride", type=int)
    s.add_argument("--format", choices=("table", "lines"), default="table")
    s.add_argument("--out", help="also write 'frame_index mae psnr ssim' lines here")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("compose", help="side-by-side or anaglyph composite")
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=("sbs", "anaglyph"), default="sbs")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("split-sbs", help="split a side-by-side frame")
    s.add_argument("--input", required=True)
    s.add_argument("--left-out", required=True)
    s.add_argument("--right-out", required=True)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("manifest", help="seeded train/test split of video directories")
    s.add_argument("dirs", nargs="+")
    s.add_argument("--train", type=int, required=True)
    s.add_argument("--test", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--root")
    s.set_defaults(func=cmd_manifest)

    s = sub.add_parser("convert", help="full pipeline over a frame directory")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--variant", choices=("poly", "dl", "dl+de", "full"), default="full")
    s.add_argument("--weights", dest="weights_path")
    s.add_argument("--external-dir", dest="external_dir")
    s.add_argument("--use-external", action="store_true", default=None, dest="use_external")
    s.add_argument("--sbs", action="store_true", default=None, dest="write_sbs")
    s.add_argument("--anaglyph", action="store_true", default=None, dest="write_anaglyph")
    s.add_argument("--debug-poison", action="store_true", default=None, dest="debug_poison")
    s.set_defaults(func=cmd_convert)
    return p


# flags that map straight onto PipelineConfig fields
_CONFIG_KEYS = (
    "seed",
    "jobs",
    "expand_radius",
    "expand_threshold",
    "external_dir",
    "weights_path",
    "use_external",
    "write_sbs",
    "write_anaglyph",
    "debug_poison",
    "channels",
    "batch_size",
    "canny_sigma",
    "canny_low",
    "canny_high",
    "alpha",
    "lambda1",
    "lambda2",
    "lambda3",
    "adversarial",
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
        if args.command == "inpaint" and args.branch == "external":
            overrides["use_external"] = True
        cfg = load_config(args.config, overrides)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StereoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FloatingPointError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
