"""Analytic test scenes: a textured background at zero disparity behind a
foreground rectangle at constant disparity.

Because both layers are fronto-parallel the right view is known exactly,
which makes the scene usable as ground truth for warping, inpainting and
training checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .core import DisparityMap, Frame, InputError, OcclusionMask, seeded_rng

BACKGROUND_PALETTE = np.array(
    [[0.10, 0.55, 0.20], [0.20, 0.70, 0.35], [0.05, 0.40, 0.60], [0.15, 0.60, 0.75]],
    dtype=np.float32,
)
FOREGROUND_PALETTE = np.array([[0.95, 0.20, 0.10], [0.85, 0.35, 0.05]], dtype=np.float32)


@dataclass(frozen=True)
class BarScene:
    left: Frame
    disparity: DisparityMap
    right: Frame
    # pixels of the right view that no left-view pixel can see
    occluded: OcclusionMask
    fg_palette: np.ndarray
    bg_palette: np.ndarray


def _background(h, w, palette, texture):
    ys, xs = np.mgrid[0:h, 0:w]
    if texture == "stripes":
        idx = (ys // 2) % len(palette)
    elif texture == "blocks":
        idx = (ys // 4 + xs // 4) % len(palette)
    else:
        raise ValueError(f"unknown texture {texture!r}")
    return palette[idx]


def bar_scene(
    height: int = 64,
    width: int = 64,
    bar: tuple[int, int, int, int] = (16, 48, 20, 36),
    bar_disparity: int = 8,
    texture: str = "stripes",
    fg_palette=FOREGROUND_PALETTE,
    bg_palette=BACKGROUND_PALETTE,
) -> BarScene:
    """Build the scene.

    Args:
        bar: ``(y0, y1, x0, x1)`` half-open rectangle of the foreground in
            the left view.
        bar_disparity: Integer disparity of the foreground.
        texture: ``"stripes"`` (background constant along rows) or
            ``"blocks"`` (4x4 checker of palette colours).
    """
    fg_palette = np.asarray(fg_palette, dtype=np.float32)
    bg_palette = np.asarray(bg_palette, dtype=np.float32)
    y0, y1, x0, x1 = bar
    d = int(bar_disparity)
    bg = _background(height, width, bg_palette, texture)
    ys, xs = np.mgrid[0:height, 0:width]
    fg = fg_palette[(xs // 2 + ys // 3) % len(fg_palette)]

    in_bar = (ys >= y0) & (ys < y1) & (xs >= x0) & (xs < x1)
    left = np.where(in_bar[..., None], fg, bg)
    disp = np.where(in_bar, float(d), 0.0)

    # right view: column x shows the foreground point from x + d if it exists
    src = xs + d
    shows_fg = (ys >= y0) & (ys < y1) & (src >= x0) & (src < x1)
    src_c = np.clip(src, 0, width - 1)
    right = np.where(shows_fg[..., None], fg[ys, src_c], bg)
    # background hidden behind the bar in the left view
    occluded = (ys >= y0) & (ys < y1) & (xs >= max(x1 - d, x0)) & (xs < x1) & ~shows_fg
    return BarScene(
        Frame(left), DisparityMap(disp), Frame(right), OcclusionMask(occluded), fg_palette, bg_palette
    )


def random_bar_scene(rng: np.random.Generator, height=64, width=64, bar_disparity=8, texture="stripes"):
    if min(height, width) < 16 or width < 4 * bar_disparity:
        raise InputError(f"{height}x{width} is too small for a bar with disparity {bar_disparity}")
    bh = int(rng.integers(height // 4, height // 2))
    bw = int(rng.integers(max(bar_disparity + 4, width // 6), width // 2))
    y0 = int(rng.integers(2, height - bh - 2))
    x0 = int(rng.integers(bar_disparity + 2, width - bw - 2))
    fg = rng.uniform(0.55, 1.0, size=(2, 3)).astype(np.float32)
    bg = rng.uniform(0.0, 0.45, size=(4, 3)).astype(np.float32)
    return bar_scene(height, width, (y0, y0 + bh, x0, x0 + bw), bar_disparity, texture, fg, bg)


def palette_distance(pixels: np.ndarray, palette: np.ndarray) -> np.ndarray:
    """Euclidean RGB distance from each pixel to its nearest palette colour."""
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 1, 3)
    pal = np.asarray(palette, dtype=np.float64).reshape(1, -1, 3)
    return np.sqrt(((px - pal) ** 2).sum(axis=2)).min(axis=1)


def training_samples(count: int, size: int = 64, seed: int = 0, cfg: PipelineConfig | None = None):
    """Synthetic ``(Ip, Ie, Il, O, Ig)`` samples built by running the three branches.

    ``O`` is the occlusion mask of the plain forward warp and ``Ig`` the
    analytic right view.
    """
    from .inpaint import inpaint_de, inpaint_fallback, inpaint_poly
    from .warp import forward_warp

    cfg = cfg or PipelineConfig()
    rng = seeded_rng(seed)
    out = []
    for _ in range(count):
        scene = random_bar_scene(rng, size, size, bar_disparity=max(2, size // 8))
        warp = forward_warp(scene.left, scene.disparity)
        ip = inpaint_poly(scene.left, scene.disparity)
        ie = inpaint_de(scene.left, scene.disparity, cfg)
        il = inpaint_fallback(warp.warped, warp.mask, cfg.fill_tolerance, cfg.fill_max_iter)
        out.append((ip, ie, il, warp.mask, scene.right))
    return out
