"""Frame-directory driver for the four conversion variants.

Input layout::

    input_dir/left/000000.png        (or .ppm)
    input_dir/disparity/000000.pfm   (or 16-bit .png with a .scale sidecar)

Output layout::

    output_dir/right/000000.png
    output_dir/sbs/000000.png        (cfg.write_sbs)
    output_dir/anaglyph/000000.png   (cfg.write_anaglyph)
    output_dir/report.txt            deterministic per-frame hole statistics
    output_dir/timing.txt            wall-clock seconds per frame
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .core import ConfigError, DisparityMap, Frame, InputError, StereoError
from .inpaint import inpaint_de, inpaint_fallback, inpaint_poly, load_external_inpaint
from .io import list_indexed, read_disparity, read_frame, write_frame
from .warp import compose_anaglyph, compose_sbs, forward_warp, mask_stats

logger = logging.getLogger(__name__)

VARIANTS = ("poly", "dl", "dl+de", "full")
POISON = (1.0, 0.0, 1.0)


class PoisonLeakError(StereoError):
    """Output changed when hole pixels were poisoned."""


@dataclass(frozen=True)
class FrameReport:
    index: int
    holes: int
    largest_run: int
    seconds: float


@dataclass(frozen=True)
class PipelineReport:
    variant: str
    frames: tuple[FrameReport, ...]
    outputs: tuple[Path, ...]

    def text(self) -> str:
        lines = [f"variant {self.variant}", f"frames {len(self.frames)}", "index holes largest_run"]
        lines += [f"{f.index} {f.holes} {f.largest_run}" for f in self.frames]
        return "\n".join(lines) + "\n"

    def timing_text(self) -> str:
        lines = [f"{f.index} {f.seconds:.6f}" for f in self.frames]
        lines.append(f"total {sum(f.seconds for f in self.frames):.6f}")
        return "\n".join(lines) + "\n"


def _layer_fill(warp, cfg: PipelineConfig, index: int) -> Frame:
    """The 'DL' hole filler: an external inpainter's frame or diffusion."""
    if cfg.use_external:
        if not cfg.external_dir or not Path(cfg.external_dir).is_dir():
            raise InputError(f"external inpainting directory missing: {cfg.external_dir!r}")
        ext = load_external_inpaint(cfg.external_dir, index, (warp.warped.width, warp.warped.height))
        # keep every visible pixel from the warp, take only holes from outside
        px = np.where(warp.mask.bits[..., None], ext.pixels, warp.warped.pixels)
        return Frame(px)
    if not cfg.use_fallback:
        raise ConfigError("the dl branch needs use_external or use_fallback")
    return inpaint_fallback(warp.warped, warp.mask, cfg.fill_tolerance, cfg.fill_max_iter)


def convert_frame(
    frame: Frame,
    disparity: DisparityMap,
    variant: str,
    cfg: PipelineConfig,
    weights=None,
    index: int = 0,
    fill=(0.0, 0.0, 0.0),
) -> tuple[Frame, object]:
    """Right view for one frame; also returns the plain warp result."""
    warp = forward_warp(frame, disparity, fill=fill)
    if variant == "poly":
        return inpaint_poly(frame, disparity), warp
    if variant == "dl":
        return _layer_fill(warp, cfg, index), warp
    if variant == "dl+de":
        return inpaint_de(frame, disparity, cfg, fill=fill), warp
    if variant == "full":
        from .refiner import refiner_forward

        if weights is None:
            raise InputError("variant 'full' needs refiner weights")
        ip = inpaint_poly(frame, disparity) if cfg.use_poly else _layer_fill(warp, cfg, index)
        ie = inpaint_de(frame, disparity, cfg, fill=fill) if cfg.use_de else _layer_fill(warp, cfg, index)
        il = _layer_fill(warp, cfg, index)
        return refiner_forward(ip, ie, il, weights).output, warp
    raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")


def load_pair(input_dir, index: int, left: dict, disp: dict) -> tuple[Frame, DisparityMap]:
    return read_frame(left[index]), read_disparity(disp[index])


def _resolve_weights(variant: str, cfg: PipelineConfig, weights):
    if variant != "full" or weights is not None:
        return weights
    from .refiner import load_weights

    if not cfg.weights_path:
        raise ConfigError("variant 'full' needs weights_path")
    if not Path(cfg.weights_path).is_file():
        raise InputError(f"weights file not found: {cfg.weights_path}")
    return load_weights(cfg.weights_path)


def run_pipeline(
    cfg: PipelineConfig,
    input_dir,
    output_dir,
    variant: str = "full",
    weights=None,
    ext: str = ".png",
) -> PipelineReport:
    """Convert every indexed frame of ``input_dir`` and write the results.

    Frames are processed by ``cfg.jobs`` worker threads; outputs and the
    report are written in index order.  With ``cfg.debug_poison`` every
    frame is converted a second time with hole pixels of the warp set to a
    poison colour and the two results must match bit for bit.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    input_dir, output_dir = Path(input_dir), Path(output_dir)
    left = list_indexed(input_dir / "left", {".png", ".ppm"})
    disp = list_indexed(input_dir / "disparity", {".pfm", ".png"})
    if sorted(left) != sorted(disp):
        raise InputError("left frames and disparity maps are not aligned by index")
    if not left:
        raise InputError(f"no frames in {input_dir / 'left'}")
    weights = _resolve_weights(variant, cfg, weights)

    def work(index: int):
        t0 = time.perf_counter()
        frame, d = load_pair(input_dir, index, left, disp)
        right, warp = convert_frame(frame, d, variant, cfg, weights, index)
        if cfg.debug_poison:
            poisoned, _ = convert_frame(frame, d, variant, cfg, weights, index, fill=POISON)
            if poisoned != right:
                raise PoisonLeakError(f"frame {index}: output depends on occluded pixels")
        stats = mask_stats(warp.mask)
        return frame, right, FrameReport(index, stats.count, stats.largest_run, time.perf_counter() - t0)

    indices = sorted(left)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(work, indices))
    else:
        results = [work(i) for i in indices]

    outputs = []
    for index, (frame, right, _) in zip(indices, results):
        path = output_dir / "right" / f"{index:06d}{ext}"
        write_frame(right, path)
        outputs.append(path)
        if cfg.write_sbs:
            write_frame(compose_sbs(frame, right), output_dir / "sbs" / f"{index:06d}{ext}")
        if cfg.write_anaglyph:
            write_frame(compose_anaglyph(frame, right), output_dir / "anaglyph" / f"{index:06d}{ext}")
    report = PipelineReport(variant, tuple(r[2] for r in results), tuple(outputs))
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "report.txt").write_text(report.text())
    (output_dir / "timing.txt").write_text(report.timing_text())
    logger.info("converted %d frames with variant %s", len(indices), variant)
    return report


def write_sequence(frames, disparities, input_dir, ext: str = ".png") -> None:
    """Lay out frames and disparity maps in the directory shape the driver reads."""
    from .io import write_disparity

    input_dir = Path(input_dir)
    for i, (f, d) in enumerate(zip(frames, disparities)):
        write_frame(f, input_dir / "left" / f"{i:06d}{ext}")
        write_disparity(d, input_dir / "disparity" / f"{i:06d}.pfm")


def branch_samples(input_dir, cfg: PipelineConfig):
    """Training tuples ``(Ip, Ie, Il, O, Ig)`` from ``left/``, ``disparity/`` and ``right/``."""
    input_dir = Path(input_dir)
    left = list_indexed(input_dir / "left", {".png", ".ppm"})
    disp = list_indexed(input_dir / "disparity", {".pfm", ".png"})
    right = list_indexed(input_dir / "right", {".png", ".ppm"})
    if not (sorted(left) == sorted(disp) == sorted(right)) or not left:
        raise InputError("training directory needs aligned left/, disparity/ and right/ frames")
    samples = []
    for index in sorted(left):
        frame, d = load_pair(input_dir, index, left, disp)
        warp = forward_warp(frame, d)
        samples.append(
            (
                inpaint_poly(frame, d),
                inpaint_de(frame, d, cfg),
                _layer_fill(warp, cfg, index),
                warp.mask,
                read_frame(right[index]),
            )
        )
    return samples
