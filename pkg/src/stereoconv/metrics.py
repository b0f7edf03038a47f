"""Frame and sequence quality metrics: MAE, PSNR and luma SSIM."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d

from .core import DimensionMismatchError, Frame, InputError

PSNR_CAP = 99.0
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
LUMA = np.array([0.299, 0.587, 0.114])


class FrameTooSmallError(InputError):
    pass


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a.pixels if isinstance(a, Frame) else a, dtype=np.float64)
    y = np.asarray(b.pixels if isinstance(b, Frame) else b, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"frames differ in shape: {x.shape} vs {y.shape}")
    return x, y


def mae(a, b) -> float:
    x, y = _pair(a, b)
    return float(np.abs(x - y).mean())


def mse(a, b) -> float:
    x, y = _pair(a, b)
    return float(((x - y) ** 2).mean())


def psnr(a, b) -> float:
    """Peak 1.0; identical frames give :data:`PSNR_CAP`."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / err))


def _gauss_window() -> np.ndarray:
    r = SSIM_WINDOW // 2
    g = np.exp(-(np.arange(-r, r + 1) ** 2) / (2 * SSIM_SIGMA**2))
    return g / g.sum()


def _valid_filter(img: np.ndarray, win: np.ndarray) -> np.ndarray:
    # full correlation then crop to the positions where the window fits
    r = len(win) // 2
    out = correlate1d(img, win, axis=0, mode="constant")
    out = correlate1d(out, win, axis=1, mode="constant")
    return out[r:-r, r:-r]


def luma(pixels: np.ndarray) -> np.ndarray:
    return np.asarray(pixels, dtype=np.float64) @ LUMA


def ssim(a, b) -> float:
    """Single-scale SSIM on Rec. 601 luma, averaged over every full window."""
    x, y = _pair(a, b)
    if min(x.shape[:2]) < SSIM_WINDOW:
        raise FrameTooSmallError(f"SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    if np.array_equal(x, y):
        return 1.0
    lx, ly = luma(x), luma(y)
    win = _gauss_window()
    mx, my = _valid_filter(lx, win), _valid_filter(ly, win)
    sxx = _valid_filter(lx * lx, win) - mx * mx
    syy = _valid_filter(ly * ly, win) - my * my
    sxy = _valid_filter(lx * ly, win) - mx * my
    num = (2 * mx * my + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sxx + syy + SSIM_C2)
    return float((num / den).mean())


@dataclass(frozen=True)
class FrameScore:
    index: int
    mae: float
    psnr: float
    ssim: float

    def line(self) -> str:
        return f"{self.index} {self.mae:.6f} {self.psnr:.6f} {self.ssim:.6f}"


@dataclass(frozen=True)
class SequenceScore:
    frames: tuple[FrameScore, ...]

    @property
    def mae(self) -> float:
        return float(np.mean([f.mae for f in self.frames]))

    @property
    def psnr(self) -> float:
        return float(np.mean([f.psnr for f in self.frames]))

    @property
    def ssim(self) -> float:
        return float(np.mean([f.ssim for f in self.frames]))

    def table(self) -> str:
        rows = [f"{'frame':>7} {'MAE':>10} {'PSNR':>10} {'SSIM':>10}"]
        rows += [f"{f.index:>7} {f.mae:>10.6f} {f.psnr:>10.4f} {f.ssim:>10.6f}" for f in self.frames]
        rows.append(f"{'mean':>7} {self.mae:>10.6f} {self.psnr:>10.4f} {self.ssim:>10.6f}")
        return "\n".join(rows)


def score_frames(pred: Frame, gt: Frame, index: int = 0) -> FrameScore:
    return FrameScore(index, mae(pred, gt), psnr(pred, gt), ssim(pred, gt))


def sampled_indices(count: int, stride: int = 20) -> list[int]:
    """Indices ``0, stride, 2*stride, ...`` below ``count``."""
    if stride < 1:
        raise InputError("stride must be at least 1")
    return list(range(0, count, stride))


def evaluate_sequence(pred_dir, gt_dir, stride: int = 20, jobs: int = 1) -> SequenceScore:
    """Score every ``stride``-th frame of two index-aligned frame directories."""
    from .io import list_indexed, read_frame

    pred = list_indexed(Path(pred_dir))
    gt = list_indexed(Path(gt_dir))
    if sorted(pred) != sorted(gt):
        missing = sorted(set(pred) ^ set(gt))
        raise InputError(f"frame directories are not aligned; mismatched indices {missing[:5]}")
    indices = sorted(pred)
    if not indices:
        raise InputError(f"no frames found in {pred_dir}")
    chosen = [indices[i] for i in sampled_indices(len(indices), stride)]

    def one(idx):
        return score_frames(read_frame(pred[idx]), read_frame(gt[idx]), idx)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(one, chosen))
    else:
        scores = [one(i) for i in chosen]
    return SequenceScore(tuple(scores))
