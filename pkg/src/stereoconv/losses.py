"""Training objective: weighted L1 content, perceptual, adversarial and total loss.

Images here are float64 ``(N, 3, H, W)`` batches (a single ``(H, W, 3)``
frame or :class:`Frame` is accepted where noted).  Every loss that the
trainer differentiates has a ``*_grad`` companion returning dLoss/dpred.
"""

from __future__ import annotations

import numpy as np

from .core import DimensionMismatchError, Frame, InputError, OcclusionMask, seeded_rng
from .refiner.layers import conv_backward, conv_forward, init_conv, lrelu, lrelu_backward

ALPHA = 10.0
LAMBDAS = (10.0, 2.0, 0.1)


def _batch(x) -> np.ndarray:
    if isinstance(x, Frame):
        return x.pixels.astype(np.float64).transpose(2, 0, 1)[None]
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x.transpose(2, 0, 1)[None]
    return x


def _mask_batch(mask, n: int, shape) -> np.ndarray:
    if mask is None:
        return np.zeros((n, 1) + tuple(shape), dtype=bool)
    bits = mask.bits if isinstance(mask, OcclusionMask) else np.asarray(mask, dtype=bool)
    if bits.ndim == 2:
        bits = np.broadcast_to(bits, (n,) + bits.shape)
    if bits.ndim == 3:
        bits = bits[:, None]
    if bits.shape[2:] != tuple(shape) or bits.shape[0] != n:
        raise DimensionMismatchError("occlusion mask does not match the image")
    return bits


def _content_parts(pred, gt, mask, alpha):
    p, g = _batch(pred), _batch(gt)
    if p.shape != g.shape:
        raise DimensionMismatchError(f"pred {p.shape} vs gt {g.shape}")
    n, _, h, w = p.shape
    weight = np.where(_mask_batch(mask, n, (h, w)), alpha, 1.0)
    return p, g, weight, h * w


def content_loss(pred, gt, mask=None, alpha: float = ALPHA) -> float:
    """Occlusion-weighted L1.

    ``(alpha * sum_{x in O} |gt - pred|_1 + sum_{x not in O} |gt - pred|_1)``
    divided by the pixel count; a batch gives the mean over samples.
    """
    p, g, weight, pixels = _content_parts(pred, gt, mask, alpha)
    per_sample = (weight * np.abs(g - p)).sum(axis=(1, 2, 3)) / pixels
    return float(per_sample.mean())


def content_loss_grad(pred, gt, mask=None, alpha: float = ALPHA) -> np.ndarray:
    p, g, weight, pixels = _content_parts(pred, gt, mask, alpha)
    return -weight * np.sign(g - p) / (pixels * p.shape[0])


# ---------------------------------------------------------------------------
# perceptual
# ---------------------------------------------------------------------------


class IdentityExtractor:
    """One pyramid level holding the image itself."""

    def __call__(self, img):
        return [_batch(img)]

    def vjp(self, img, grads):
        return grads[0]


class TinyExtractor:
    """Fixed random three-level strided conv stack standing in for VGG features.

    Each level is a stride-2 3x3 conv followed by leaky ReLU.  Weights come
    from a seeded generator and are never trained.
    """

    def __init__(self, channels=(8, 16, 32), seed: int = 1234):
        rng = seeded_rng(seed)
        self.layers = []
        prev = 3
        for c in channels:
            self.layers.append(init_conv(rng, c, prev, 3, gain=np.sqrt(2.0)))
            prev = c

    def _run(self, x):
        feats, caches = [], []
        for layer in self.layers:
            pre, cache = conv_forward(x, layer.kernel, layer.bias, stride=2)
            x = lrelu(pre)
            feats.append(x)
            caches.append((pre, cache))
        return feats, caches

    def __call__(self, img):
        return self._run(_batch(img))[0]

    def vjp(self, img, grads):
        _, caches = self._run(_batch(img))
        carry = None
        for i in range(len(self.layers) - 1, -1, -1):
            g = grads[i] if carry is None else grads[i] + carry
            pre, cache = caches[i]
            carry, _, _ = conv_backward(lrelu_backward(g, pre), cache, self.layers[i].kernel)
        return carry


def perceptual_loss(pred, gt, extractor=None) -> float:
    """Sum over pyramid levels of the mean absolute feature difference."""
    extractor = extractor or IdentityExtractor()
    fp, fg = extractor(pred), extractor(gt)
    if len(fp) != len(fg) or any(a.shape != b.shape for a, b in zip(fp, fg)):
        raise DimensionMismatchError("feature pyramids differ in shape")
    return float(sum(np.abs(b - a).mean() for a, b in zip(fp, fg)))


def perceptual_loss_grad(pred, gt, extractor=None) -> np.ndarray:
    extractor = extractor or IdentityExtractor()
    fp, fg = extractor(pred), extractor(gt)
    grads = [-np.sign(b - a) / a.size for a, b in zip(fp, fg)]
    return extractor.vjp(pred, grads)


# ---------------------------------------------------------------------------
# adversarial
# ---------------------------------------------------------------------------


def adversarial_loss(d_fake, d_real) -> float:
    """``mean(D(fake)) - mean(D(real))``."""
    d_fake = np.asarray(d_fake, dtype=np.float64).ravel()
    d_real = np.asarray(d_real, dtype=np.float64).ravel()
    if d_fake.size == 0 or d_real.size == 0:
        raise InputError("adversarial loss needs non-empty batches")
    return float(d_fake.mean() - d_real.mean())


class ToyCritic:
    """Two stride-2 conv layers and a spatial mean: one score per image."""

    def __init__(self, hidden: int = 8, seed: int = 4321):
        rng = seeded_rng(seed)
        self.layers = [
            init_conv(rng, hidden, 3, 3, gain=np.sqrt(2.0)),
            init_conv(rng, 1, hidden, 3, gain=1.0),
        ]

    def params(self):
        out = []
        for layer in self.layers:
            out += [layer.kernel, layer.bias]
        return out

    def _run(self, x):
        a, c1 = conv_forward(x, self.layers[0].kernel, self.layers[0].bias, stride=2)
        h = lrelu(a)
        b, c2 = conv_forward(h, self.layers[1].kernel, self.layers[1].bias, stride=2)
        return b.mean(axis=(1, 2, 3)), (a, c1, b, c2)

    def __call__(self, img) -> np.ndarray:
        return self._run(_batch(img))[0]

    def backward(self, img, upstream):
        """Gradients of ``sum(upstream * scores)`` wrt the image and the params."""
        x = _batch(img)
        _, (a, c1, b, c2) = self._run(x)
        g = np.broadcast_to(np.asarray(upstream, dtype=np.float64)[:, None, None, None], b.shape)
        g = g / (b.shape[2] * b.shape[3])
        dh, dk2, db2 = conv_backward(g, c2, self.layers[1].kernel)
        dx, dk1, db1 = conv_backward(lrelu_backward(dh, a), c1, self.layers[0].kernel)
        return dx, [dk1, db1, dk2, db2]


def adversarial_grad(fake, critic) -> np.ndarray:
    """d/dfake of ``mean(critic(fake))``; the real term has no fake dependence."""
    x = _batch(fake)
    n = x.shape[0]
    dx, _ = critic.backward(x, np.full(n, 1.0 / n))
    return dx


def total_loss(lc: float, lper: float, ladv: float, l1: float = 10.0, l2: float = 2.0, l3: float = 0.1) -> float:
    """``l1*lc + l2*lper + l3*ladv``."""
    return l1 * lc + l2 * lper + l3 * ladv


def objective(pred, gt, mask, cfg=None, extractor=None, critic=None, real=None):
    """Total loss and its gradient wrt ``pred`` for one batch.

    Returns ``(total, parts, grad)`` with ``parts`` = (content, perceptual,
    adversarial).  The adversarial term is zero when ``critic`` is None.
    """
    alpha = cfg.alpha if cfg else ALPHA
    l1, l2, l3 = (cfg.lambda1, cfg.lambda2, cfg.lambda3) if cfg else LAMBDAS
    extractor = extractor or IdentityExtractor()
    real = gt if real is None else real

    lc = content_loss(pred, gt, mask, alpha)
    lp = perceptual_loss(pred, gt, extractor)
    grad = l1 * content_loss_grad(pred, gt, mask, alpha) + l2 * perceptual_loss_grad(pred, gt, extractor)
    la = 0.0
    if critic is not None:
        la = adversarial_loss(critic(pred), critic(real))
        grad = grad + l3 * adversarial_grad(pred, critic)
    return total_loss(lc, lp, la, l1, l2, l3), (lc, lp, la), grad
