"""Hole filling branches: polyline, disparity-expansion, external and diffusion."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .config import PipelineConfig
from .core import DimensionMismatchError, DisparityMap, EdgeMap, Frame, InputError, OcclusionMask
from .core import validate_pair
from .disparity import expand_disparity
from .warp import forward_warp


class MissingFrameError(InputError, FileNotFoundError):
    pass


def _fill_uncovered(out: np.ndarray, covered: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Copy each uncovered column from the nearest covered one in its row.

    Ties go to the right-hand neighbour.  Rows with no coverage at all keep
    the source row.
    """
    h, w = covered.shape
    idx = np.broadcast_to(np.arange(w), (h, w))
    left = np.maximum.accumulate(np.where(covered, idx, -1), axis=1)
    right = np.minimum.accumulate(np.where(covered, idx, w)[:, ::-1], axis=1)[:, ::-1]
    dl = np.where(left >= 0, idx - left, np.iinfo(np.int64).max)
    dr = np.where(right < w, right - idx, np.iinfo(np.int64).max)
    src = np.where(dr <= dl, right, left)
    ys, xs = np.nonzero(~covered & (src >= 0) & (src < w))
    out[ys, xs] = out[ys, src[ys, xs]]
    empty = ~covered.any(axis=1)
    out[empty] = source[empty]
    return out


def inpaint_poly(frame: Frame, disparity: DisparityMap) -> Frame:
    """Morph each row as a polyline and rasterise it into the right view.

    Row samples sit at ``x - d(x)``.  Every forward segment between two
    neighbouring samples is rasterised onto the integer columns it spans,
    interpolating colour and disparity linearly, so background gets
    stretched across disocclusions.  Backward segments (folds) are hidden;
    where segments overlap the larger interpolated disparity wins, ties to
    the leftmost segment.  Columns no segment reaches copy the nearest
    covered column.
    """
    validate_pair(frame, disparity)
    out, covered = kernels.poly_raster(frame.pixels, disparity.values)
    return Frame(_fill_uncovered(out, covered, frame.pixels))


def fill_from_right(pixels: np.ndarray, holes: np.ndarray) -> np.ndarray:
    """Each hole takes the nearest known pixel to its right (left at row ends)."""
    return kernels.propagate_right(pixels, holes)


def inpaint_de(
    frame: Frame,
    disparity: DisparityMap,
    cfg: Optional[PipelineConfig] = None,
    edges: Optional[EdgeMap] = None,
    fill=(0.0, 0.0, 0.0),
) -> Frame:
    """Disparity-expansion branch.

    The disparity map is expanded around depth edges, the frame is warped
    with the expanded map, and whatever holes remain are filled from the
    background side (the right, for left-view foreground).
    """
    cfg = cfg or PipelineConfig()
    validate_pair(frame, disparity)
    expanded = expand_disparity(
        disparity,
        cfg.expand_radius,
        cfg.expand_threshold,
        edges=edges,
        cfg=cfg,
        mirrored=cfg.expand_mirrored,
    )
    res = forward_warp(frame, expanded, fill=fill)
    filled = fill_from_right(res.warped.pixels, res.mask.bits)
    return Frame(filled)


def external_frame_path(directory, frame_index: int) -> Optional[Path]:
    directory = Path(directory)
    for ext in (".png", ".ppm"):
        path = directory / f"{frame_index:06d}{ext}"
        if path.exists():
            return path
    return None


def load_external_inpaint(directory, frame_index: int, expected_dims: tuple[int, int]) -> Frame:
    """Load an externally inpainted frame (e.g. a video inpainter's output).

    Files are named by zero-padded six-digit index, ``000042.png`` or
    ``.ppm``.  ``expected_dims`` is ``(width, height)``.
    """
    from .io import read_frame

    path = external_frame_path(directory, frame_index)
    if path is None:
        raise MissingFrameError(f"no external frame {frame_index:06d} in {directory}")
    frame = read_frame(path)
    w, h = expected_dims
    if (frame.width, frame.height) != (w, h):
        raise DimensionMismatchError(
            f"{path} is {frame.width}x{frame.height}, expected {w}x{h}"
        )
    return frame


def inpaint_fallback(
    warped: Frame, mask: OcclusionMask, tol: float = 1e-4, max_iter: int = 20000
) -> Frame:
    """Diffusion fill: Jacobi sweeps of 4-neighbour averaging over the holes.

    Holes start at the mean colour of the known pixels and are relaxed until
    the largest per-sweep change drops below ``tol``.  Known pixels are never
    touched and hole pixels of ``warped`` are never read.
    """
    if warped.shape != mask.shape:
        raise DimensionMismatchError("warped frame and mask differ in shape")
    holes = mask.bits
    img = warped.pixels.astype(np.float64)
    if not holes.any():
        return warped
    known = ~holes
    start = img[known].mean(axis=0) if known.any() else np.zeros(3)
    img[holes] = start
    filled, _ = kernels.jacobi(img, holes, float(tol), int(max_iter))
    out = np.clip(filled, 0.0, 1.0).astype(np.float32)
    out[known] = warped.pixels[known]
    return Frame(out)
