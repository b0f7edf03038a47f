"""Disparity conditioning: depth conversion, Canny edges and disparity expansion."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import kernels
from .config import PipelineConfig
from .core import ConfigError, DisparityMap, EdgeMap, InvalidValueError


def depth_to_disparity(depth, gain: float, shift: float) -> DisparityMap:
    """``d = clamp(gain / depth + shift, 0, width)``."""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise InvalidValueError(f"depth must be HxW, got {depth.shape}")
    if not np.all(np.isfinite(depth)) or np.any(depth <= 0):
        raise InvalidValueError("depth values must be finite and > 0")
    d = gain * (1.0 / depth) + shift
    if not np.all(np.isfinite(d)):
        raise InvalidValueError("depth conversion produced non-finite disparity")
    return DisparityMap(np.clip(d, 0.0, depth.shape[1]))


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_axis(img: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    r = len(taps) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(img, pad, mode="edge")
    n = img.shape[axis]
    out = np.zeros_like(img)
    for i, tap in enumerate(taps):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + n)
        out += tap * padded[tuple(sl)]
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable blur, kernel truncated at 3 sigma, edge-replicated borders."""
    k = gaussian_kernel(sigma)
    return _correlate_axis(_correlate_axis(img, k, 0), k, 1)


def sobel(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    smooth = np.array([1.0, 2.0, 1.0])
    deriv = np.array([-1.0, 0.0, 1.0])
    gx = _correlate_axis(_correlate_axis(img, smooth, 0), deriv, 1)
    gy = _correlate_axis(_correlate_axis(img, deriv, 0), smooth, 1)
    return gx, gy


def canny_edges(
    disparity: DisparityMap,
    sigma: float = 1.4,
    low: float = 0.1,
    high: float = 0.3,
    relative: bool = True,
) -> EdgeMap:
    """Canny edge map of a disparity field.

    Stages run in the textbook order: Gaussian blur, Sobel gradients,
    non-maximum suppression with four direction bins, then double-threshold
    hysteresis over 8-connected neighbours.

    With ``relative`` on, ``low`` and ``high`` are fractions of the largest
    gradient magnitude; otherwise they are absolute magnitudes in disparity
    units per pixel (Sobel-scaled).
    """
    if not sigma > 0:
        raise ConfigError("sigma must be > 0")
    if not 0 < low < high:
        raise ConfigError("Canny thresholds need 0 < low < high")
    values = disparity.values if isinstance(disparity, DisparityMap) else np.asarray(disparity)
    img = values.astype(np.float64)

    blurred = gaussian_blur(img, sigma)
    gx, gy = sobel(blurred)
    mag = np.hypot(gx, gy)
    peak = float(mag.max())
    if peak <= 0.0:
        return EdgeMap(np.zeros(img.shape, dtype=bool))
    if relative:
        low, high = low * peak, high * peak
    thin = kernels.nms(mag, gx, gy)
    return EdgeMap(kernels.hysteresis(thin, float(low), float(high)))


def expand_disparity(
    disparity: DisparityMap,
    k: int,
    lam: float,
    edges: Optional[EdgeMap] = None,
    cfg: Optional[PipelineConfig] = None,
    mirrored: bool = False,
) -> DisparityMap:
    """Disparity expansion around foreground/background edges.

    For every edge pixel ``(i, j)`` in row-major order with
    ``k <= j < cols - k`` and ``k <= i < rows - k``: when
    ``I[i, j-1] - I[i, j+1] > lam`` the block ``[i-k:i+k, j-k:j+k]`` of the
    output is set to ``I[i, j-1]``.  Reads always come from the input map,
    writes go to a copy, later blocks overwrite earlier ones.

    Args:
        disparity: Input map ``I``.  A :class:`DisparityMap` gives a
            :class:`DisparityMap`; a plain array (which need not respect the
            map's width bound) gives a float32 array.
        k: Block radius; the written block is ``2k x 2k``.
        lam: Disparity contrast threshold.
        edges: Precomputed edge map.  When omitted, :func:`canny_edges` runs
            with the Canny settings of ``cfg`` (defaults if ``cfg`` is None).
        mirrored: Also expand right-foreground edges
            (``I[i, j+1] - I[i, j-1] > lam``), writing ``I[i, j+1]``.
    """
    if int(k) != k or k < 1:
        raise ConfigError("k must be an integer >= 1")
    if not lam > 0:
        raise ConfigError("lambda must be > 0")
    wrapped = isinstance(disparity, DisparityMap)
    values = disparity.values if wrapped else np.asarray(disparity, dtype=np.float32)
    if values.ndim != 2 or not np.isfinite(values).all():
        raise InvalidValueError("disparity must be a finite HxW array")
    if edges is None:
        cfg = cfg or PipelineConfig()
        edges = canny_edges(values, cfg.canny_sigma, cfg.canny_low, cfg.canny_high, cfg.canny_relative)
    bits = edges.bits if isinstance(edges, EdgeMap) else np.asarray(edges, dtype=bool)
    if bits.shape != values.shape:
        raise InvalidValueError("edge map and disparity differ in shape")
    out = kernels.expand(values, bits, int(k), float(lam), bool(mirrored))
    return DisparityMap(out) if wrapped else out
