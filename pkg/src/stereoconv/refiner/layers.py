"""Float64 building blocks with hand-written backward passes.

Tensors are batched channel-first, ``(N, C, H, W)``.  Convolutions use
"same" zero padding and either stride 1 or stride 2; a stride-2 output has
``ceil(H / 2) x ceil(W / 2)`` pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAK = 0.2


@dataclass
class ConvLayer:
    """``kernel`` is ``(out, in, kh, kw)``, ``bias`` is ``(out,)``."""

    kernel: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.kernel.ndim != 4 or self.bias.shape != (self.kernel.shape[0],):
            raise ValueError("kernel must be (out, in, kh, kw) with a matching bias")
        kh, kw = self.kernel.shape[2:]
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValueError("kernel sizes must be odd")

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]

    def copy(self) -> ConvLayer:
        return ConvLayer(self.kernel.copy(), self.bias.copy())


def conv_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int = 1):
    """Returns the output and a cache for :func:`conv_backward`."""
    n, c, h, w = x.shape
    o, ci, kh, kw = kernel.shape
    if ci != c:
        raise ValueError(f"conv expects {ci} input channels, got {c}")
    ph, pw = kh // 2, kw // 2
    ho = (h + 2 * ph - kh) // stride + 1
    wo = (w + 2 * pw - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = np.empty((n, c, kh, kw, ho, wo))
    for dy in range(kh):
        for dx in range(kw):
            cols[:, :, dy, dx] = xp[:, :, dy : dy + stride * ho : stride, dx : dx + stride * wo : stride]
    cols = cols.reshape(n, c * kh * kw, ho * wo)
    out = np.matmul(kernel.reshape(o, -1), cols)
    out += bias[None, :, None]
    return out.reshape(n, o, ho, wo), (cols, x.shape, stride)


def conv_backward(grad: np.ndarray, cache, kernel: np.ndarray, need_input: bool = True):
    """Gradients wrt input, kernel and bias."""
    cols, xshape, stride = cache
    n, c, h, w = xshape
    o, _, kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    ho, wo = grad.shape[2:]
    g = grad.reshape(n, o, ho * wo)
    # per-sample products summed in index order keep the result deterministic
    dk = np.matmul(g, cols.transpose(0, 2, 1)).sum(axis=0).reshape(kernel.shape)
    db = g.sum(axis=(0, 2))
    if not need_input:
        return None, dk, db
    dcols = np.matmul(kernel.reshape(o, -1).T, g).reshape(n, c, kh, kw, ho, wo)
    dxp = np.zeros((n, c, h + 2 * ph, w + 2 * pw))
    for dy in range(kh):
        for dx in range(kw):
            dxp[:, :, dy : dy + stride * ho : stride, dx : dx + stride * wo : stride] += dcols[:, :, dy, dx]
    return dxp[:, :, ph : ph + h, pw : pw + w], dk, db


def lrelu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, LEAK * x)


def lrelu_backward(grad: np.ndarray, pre: np.ndarray) -> np.ndarray:
    return np.where(pre > 0, grad, LEAK * grad)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign to stay finite for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def upsample(x: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour 2x upsampling cropped to ``size``."""
    h, w = size
    up = np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)
    return up[:, :, :h, :w]


def upsample_backward(grad: np.ndarray, coarse: tuple[int, int]) -> np.ndarray:
    n, c, h, w = grad.shape
    ch, cw = coarse
    full = np.zeros((n, c, 2 * ch, 2 * cw))
    full[:, :, :h, :w] = grad
    return full.reshape(n, c, ch, 2, cw, 2).sum(axis=(3, 5))


def init_conv(rng: np.random.Generator, out_ch: int, in_ch: int, ksize: int, gain: float) -> ConvLayer:
    """Normal init with std ``gain / sqrt(fan_in)``, rounded to float32 values.

    The rounding makes freshly initialised weights survive the float32
    weights file unchanged.
    """
    fan_in = in_ch * ksize * ksize
    kernel = rng.standard_normal((out_ch, in_ch, ksize, ksize)) * (gain / np.sqrt(fan_in))
    kernel = kernel.astype(np.float32).astype(np.float64)
    return ConvLayer(kernel, np.zeros(out_ch))
