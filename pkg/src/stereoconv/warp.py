"""Left-to-right forward warping and stereo composites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DimensionMismatchError, DisparityMap, Frame, OcclusionMask, validate_pair

NO_SPLAT = float(kernels.NO_SPLAT)


@dataclass(frozen=True)
class WarpResult:
    """Output of :func:`forward_warp`.

    ``zbuffer`` holds the winning disparity per target pixel, or
    ``NO_SPLAT`` (-1) where nothing landed.  Holes are black in ``warped``,
    but only ``mask`` is authoritative.
    """

    warped: Frame
    mask: OcclusionMask
    zbuffer: np.ndarray
    source_x: np.ndarray


def forward_warp(frame: Frame, disparity: DisparityMap, fill=(0.0, 0.0, 0.0)) -> WarpResult:
    """Splat every left-view pixel to column ``round(x - d)`` of the right view.

    Rounding is half away from zero.  When several sources hit one target the
    largest disparity (nearest surface) wins, ties going to the smallest
    source column.  Targets outside the frame are dropped, targets nobody
    hits become holes.

    Args:
        frame: Left view.
        disparity: Non-negative disparity aligned with ``frame``.
        fill: Colour written under holes.  Anything but black is only useful
            for checking that downstream code ignores hole pixels.
    """
    validate_pair(frame, disparity)
    warped, zbuf, src = kernels.splat(frame.pixels, disparity.values)
    holes = zbuf == kernels.NO_SPLAT
    if any(fill):
        warped[holes] = np.asarray(fill, dtype=np.float32)
    zbuf.flags.writeable = False
    src.flags.writeable = False
    return WarpResult(Frame(warped), OcclusionMask(holes), zbuf, src)


@dataclass(frozen=True)
class HoleStats:
    count: int
    largest_run: int
    largest_run_per_row: np.ndarray


def depth_of_field_mask_stats(mask: OcclusionMask) -> HoleStats:
    """Hole count and the longest horizontal hole run, per row and overall."""
    bits = mask.bits if isinstance(mask, OcclusionMask) else np.asarray(mask, dtype=bool)
    h, w = bits.shape
    # run length ending at each column
    runs = np.zeros((h, w), dtype=np.int64)
    run = np.zeros(h, dtype=np.int64)
    for x in range(w):
        run = np.where(bits[:, x], run + 1, 0)
        runs[:, x] = run
    per_row = runs.max(axis=1)
    return HoleStats(int(bits.sum()), int(per_row.max()), per_row)


# the shorter name reads better at call sites
mask_stats = depth_of_field_mask_stats


def _check_pair(left: Frame, right: Frame) -> None:
    if left.shape != right.shape:
        raise DimensionMismatchError(
            f"left is {left.height}x{left.width}, right is {right.height}x{right.width}"
        )


def compose_sbs(left: Frame, right: Frame) -> Frame:
    """Place the two views side by side, left view first."""
    _check_pair(left, right)
    return Frame(np.concatenate([left.pixels, right.pixels], axis=1))


def split_sbs(frame: Frame) -> tuple[Frame, Frame]:
    """Inverse of :func:`compose_sbs`; the width must be even."""
    if frame.width % 2:
        raise DimensionMismatchError(f"side-by-side frame has odd width {frame.width}")
    half = frame.width // 2
    return Frame(frame.pixels[:, :half]), Frame(frame.pixels[:, half:])


def compose_anaglyph(left: Frame, right: Frame) -> Frame:
    """Red/cyan anaglyph: red from the left view, green and blue from the right."""
    _check_pair(left, right)
    out = right.pixels.copy()
    out[:, :, 0] = left.pixels[:, :, 0]
    return Frame(out)
