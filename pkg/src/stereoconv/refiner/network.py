"""Mask-based hierarchical feature-update refiner.

Data flow for ``L`` levels (channel plan ``c_0 .. c_{L-1}``)::

    x = [Ip, Ie, Il]                                  9 channels
    e_0 = lrelu(conv(x)),  e_m = lrelu(conv_s2(e_{m-1}))
    u_{L-1} = e_{L-1};  u_m = FUU(e_m, up(u_{m+1}))    coarse to fine
    d_{L-1} = u_{L-1};  d_m = lrelu(conv([up(d_{m+1}), u_m]))
    M1, M2, M3, C = sigmoid(heads(d_0))
    F1 = M1*Ip + (1-M1)*Ie;  F2 = M2*F1 + (1-M2)*Il;  G = M3*F2 + (1-M3)*C

Everything runs in float64 on ``(N, C, H, W)`` batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import DimensionMismatchError, FeatureMap, Frame, seeded_rng
from .layers import (
    ConvLayer,
    conv_backward,
    conv_forward,
    init_conv,
    lrelu,
    lrelu_backward,
    sigmoid,
    upsample,
    upsample_backward,
)

IN_CHANNELS = 9
HEAD_NAMES = ("m1", "m2", "m3", "content")


class WeightPlanError(DimensionMismatchError):
    pass


@dataclass
class FuuWeights:
    z: ConvLayer
    q: ConvLayer
    r: ConvLayer

    def __post_init__(self):
        shapes = {self.z.kernel.shape[1:], self.q.kernel.shape[1:], self.r.kernel.shape[1:]}
        outs = {self.z.out_channels, self.q.out_channels, self.r.out_channels}
        if len(shapes) != 1 or len(outs) != 1:
            raise WeightPlanError("FUU gate and candidates must share input and output plans")

    def layers(self):
        return (self.z, self.q, self.r)

    def fused(self) -> tuple[np.ndarray, np.ndarray]:
        kernel = np.concatenate([layer.kernel for layer in self.layers()], axis=0)
        bias = np.concatenate([layer.bias for layer in self.layers()])
        return kernel, bias


@dataclass
class RefinerWeights:
    encoder: list
    fuu: list
    decoder: list
    heads: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def levels(self) -> int:
        return len(self.encoder)

    @property
    def channels(self) -> tuple:
        return tuple(layer.out_channels for layer in self.encoder)

    @property
    def kernel_size(self) -> int:
        return self.encoder[0].kernel.shape[2]

    def validate(self) -> None:
        L = len(self.encoder)
        if L < 2:
            raise WeightPlanError("the refiner needs at least two levels")
        if len(self.fuu) != L - 1 or len(self.decoder) != L - 1:
            raise WeightPlanError("need L-1 FUU and decoder layers")
        ch = [layer.out_channels for layer in self.encoder]
        expect_in = [IN_CHANNELS] + ch[:-1]
        for m, layer in enumerate(self.encoder):
            if layer.in_channels != expect_in[m]:
                raise WeightPlanError(f"encoder {m} expects {expect_in[m]} inputs")
        for m in range(L - 1):
            cat = ch[m] + ch[m + 1]
            for layer in self.fuu[m].layers():
                if layer.in_channels != cat or layer.out_channels != ch[m]:
                    raise WeightPlanError(f"FUU {m} must map {cat} -> {ch[m]} channels")
            dec = self.decoder[m]
            if dec.in_channels != cat or dec.out_channels != ch[m]:
                raise WeightPlanError(f"decoder {m} must map {cat} -> {ch[m]} channels")
        if tuple(self.heads) != HEAD_NAMES:
            raise WeightPlanError(f"heads must be {HEAD_NAMES}")
        for name, layer in self.heads.items():
            want = 3 if name == "content" else 1
            if layer.in_channels != ch[0] or layer.out_channels != want:
                raise WeightPlanError(f"head {name} must map {ch[0]} -> {want} channels")
        for layer in self.layers():
            if not (np.all(np.isfinite(layer.kernel)) and np.all(np.isfinite(layer.bias))):
                raise WeightPlanError("weights contain non-finite values")

    def layers(self) -> list:
        """All conv layers in declaration order."""
        out = list(self.encoder)
        for f in self.fuu:
            out.extend(f.layers())
        out.extend(self.decoder)
        out.extend(self.heads[name] for name in HEAD_NAMES)
        return out

    def layer_names(self) -> list:
        names = [f"encoder{m}" for m in range(len(self.encoder))]
        for m in range(len(self.fuu)):
            names += [f"fuu{m}.z", f"fuu{m}.q", f"fuu{m}.r"]
        names += [f"decoder{m}" for m in range(len(self.decoder))]
        names += [f"head.{n}" for n in HEAD_NAMES]
        return names

    def params(self) -> list:
        """Parameter arrays (kernel, bias per layer) in declaration order; live views."""
        out = []
        for layer in self.layers():
            out += [layer.kernel, layer.bias]
        return out

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params())

    def copy(self) -> RefinerWeights:
        return RefinerWeights(
            [layer.copy() for layer in self.encoder],
            [FuuWeights(f.z.copy(), f.q.copy(), f.r.copy()) for f in self.fuu],
            [layer.copy() for layer in self.decoder],
            {name: layer.copy() for name, layer in self.heads.items()},
        )

    def zeros_like(self) -> RefinerWeights:
        w = self.copy()
        for p in w.params():
            p[...] = 0.0
        return w

    def equals(self, other: RefinerWeights) -> bool:
        mine, theirs = self.params(), other.params()
        return len(mine) == len(theirs) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(mine, theirs)
        )

    @classmethod
    def init(cls, channels=(16, 32, 64), seed: int = 0, kernel_size: int = 3) -> RefinerWeights:
        rng = seeded_rng(seed)
        ch = [int(c) for c in channels]
        k = kernel_size
        enc, fuu, dec = [], [], []
        prev = IN_CHANNELS
        for c in ch:
            enc.append(init_conv(rng, c, prev, k, gain=np.sqrt(2.0)))
            prev = c
        for m in range(len(ch) - 1):
            cat = ch[m] + ch[m + 1]
            fuu.append(FuuWeights(*(init_conv(rng, ch[m], cat, k, gain=1.0) for _ in range(3))))
        for m in range(len(ch) - 1):
            dec.append(init_conv(rng, ch[m], ch[m] + ch[m + 1], k, gain=np.sqrt(2.0)))
        heads = {name: init_conv(rng, 3 if name == "content" else 1, ch[0], k, gain=1.0) for name in HEAD_NAMES}
        return cls(enc, fuu, dec, heads)

    @classmethod
    def selector(cls, channels=(16, 32, 64), m1=1, m2=1, m3=1, kernel_size: int = 3) -> RefinerWeights:
        """Weights whose heads emit constant 0/1 masks, independent of input.

        Head kernels are zeroed and biases set to +-40, where the float64
        sigmoid rounds to exactly 1.0 or 0.0.
        """
        w = cls.init(channels, seed=0, kernel_size=kernel_size)
        for name, on in zip(("m1", "m2", "m3"), (m1, m2, m3)):
            head = w.heads[name]
            head.kernel[...] = 0.0
            head.bias[...] = 40.0 if on else -40.0
        return w


# ---------------------------------------------------------------------------
# FUU
# ---------------------------------------------------------------------------


def _fuu_forward(f_i: np.ndarray, f_coarse: np.ndarray, w: FuuWeights):
    h, wd = f_i.shape[2:]
    want = ((h + 1) // 2, (wd + 1) // 2)
    if f_coarse.shape[2:] != want:
        raise DimensionMismatchError(f"coarser feature must be {want}, got {f_coarse.shape[2:]}")
    c = f_i.shape[1]
    up = upsample(f_coarse, (h, wd))
    cat = np.concatenate([f_i, up], axis=1)
    kernel, bias = w.fused()
    if kernel.shape[1] != cat.shape[1]:
        raise WeightPlanError(f"FUU expects {kernel.shape[1]} input channels, got {cat.shape[1]}")
    pre, conv_cache = conv_forward(cat, kernel, bias)
    z = sigmoid(pre[:, :c])
    q = np.tanh(pre[:, c : 2 * c])
    r = np.tanh(pre[:, 2 * c :])
    out = q * z + (1.0 - z) * r
    return out, (conv_cache, kernel, z, q, r, c, f_coarse.shape[2:])


def _fuu_backward(grad: np.ndarray, cache):
    conv_cache, kernel, z, q, r, c, coarse = cache
    dz = grad * (q - r)
    dq = grad * z
    dr = grad * (1.0 - z)
    dpre = np.concatenate([dz * z * (1.0 - z), dq * (1.0 - q * q), dr * (1.0 - r * r)], axis=1)
    dcat, dk, db = conv_backward(dpre, conv_cache, kernel)
    d_fi = dcat[:, :c]
    d_coarse = upsample_backward(dcat[:, c:], coarse)
    grads = FuuWeights(
        ConvLayer(dk[:c], db[:c]), ConvLayer(dk[c : 2 * c], db[c : 2 * c]), ConvLayer(dk[2 * c :], db[2 * c :])
    )
    return d_fi, d_coarse, grads


def fuu_update(f_m, f_m1, w: FuuWeights):
    """One feature-update step.

    ``f_m1`` (the coarser level) is upsampled to ``f_m``'s size, the two are
    stacked, and ``z = sigmoid(conv_z)``, ``q = tanh(conv_q)``,
    ``r = tanh(conv_r)`` give ``q*z + (1-z)*r``.

    Accepts :class:`FeatureMap` (returns one) or ``(C, H, W)`` /
    ``(N, C, H, W)`` arrays.
    """
    as_feature = isinstance(f_m, FeatureMap)
    a = f_m.values if isinstance(f_m, FeatureMap) else np.asarray(f_m, dtype=np.float64)
    b = f_m1.values if isinstance(f_m1, FeatureMap) else np.asarray(f_m1, dtype=np.float64)
    single = a.ndim == 3
    if single:
        a, b = a[None], b[None]
    out, _ = _fuu_forward(a, b, w)
    if single:
        out = out[0]
    return FeatureMap(out) if as_feature else out


# ---------------------------------------------------------------------------
# full network
# ---------------------------------------------------------------------------


def frames_to_batch(frames) -> np.ndarray:
    """``(H, W, 3)`` frames or arrays -> ``(N, 3, H, W)`` float64."""
    arrs = [f.pixels if isinstance(f, Frame) else np.asarray(f) for f in frames]
    return np.stack([a.astype(np.float64).transpose(2, 0, 1) for a in arrs])


def _as_batch(x) -> np.ndarray:
    if isinstance(x, Frame):
        return x.pixels.astype(np.float64).transpose(2, 0, 1)[None]
    # single frames are (H, W, 3); anything 4-D is already a batch
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x.transpose(2, 0, 1)[None]
    return x


@dataclass
class RefinerOutput:
    """Batched ``(N, C, H, W)`` outputs of :func:`forward`."""

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    content: np.ndarray
    fused1: np.ndarray
    fused2: np.ndarray
    output: np.ndarray

    def frame(self, i: int = 0) -> Frame:
        return Frame(np.clip(self.output[i].transpose(1, 2, 0), 0.0, 1.0))


def forward(ip, ie, il, w: RefinerWeights, masks=None):
    """Batched forward pass; returns ``(RefinerOutput, cache)``.

    Args:
        ip, ie, il: ``(N, 3, H, W)`` float64 branch outputs.
        w: Network weights.
        masks: Optional ``(M1, M2, M3)`` replacing the head masks in the
            fusion step.  Each entry is a scalar or broadcastable array.
    """
    if not (ip.shape == ie.shape == il.shape) or ip.ndim != 4 or ip.shape[1] != 3:
        raise DimensionMismatchError("refiner inputs must be equal (N, 3, H, W) batches")
    L = w.levels
    x = np.concatenate([ip, ie, il], axis=1)

    enc_pre, enc_out, enc_cache = [], [], []
    h = x
    for m, layer in enumerate(w.encoder):
        pre, cache = conv_forward(h, layer.kernel, layer.bias, stride=1 if m == 0 else 2)
        h = lrelu(pre)
        enc_pre.append(pre)
        enc_out.append(h)
        enc_cache.append(cache)

    upd = [None] * L
    fuu_cache = [None] * (L - 1)
    upd[L - 1] = enc_out[L - 1]
    for m in range(L - 2, -1, -1):
        upd[m], fuu_cache[m] = _fuu_forward(enc_out[m], upd[m + 1], w.fuu[m])

    dec = [None] * L
    dec_pre = [None] * (L - 1)
    dec_cache = [None] * (L - 1)
    dec[L - 1] = upd[L - 1]
    for m in range(L - 2, -1, -1):
        size = enc_out[m].shape[2:]
        cat = np.concatenate([upsample(dec[m + 1], size), upd[m]], axis=1)
        layer = w.decoder[m]
        dec_pre[m], dec_cache[m] = conv_forward(cat, layer.kernel, layer.bias)
        dec[m] = lrelu(dec_pre[m])

    head_kernel = np.concatenate([w.heads[n].kernel for n in HEAD_NAMES], axis=0)
    head_bias = np.concatenate([w.heads[n].bias for n in HEAD_NAMES])
    head_pre, head_cache = conv_forward(dec[0], head_kernel, head_bias)
    act = sigmoid(head_pre)
    m1, m2, m3, content = act[:, 0:1], act[:, 1:2], act[:, 2:3], act[:, 3:6]

    if masks is not None:
        f_m1, f_m2, f_m3 = (np.broadcast_to(np.asarray(v, dtype=np.float64), m1.shape) for v in masks)
    else:
        f_m1, f_m2, f_m3 = m1, m2, m3
    fused1 = f_m1 * ip + (1.0 - f_m1) * ie
    fused2 = f_m2 * fused1 + (1.0 - f_m2) * il
    out = f_m3 * fused2 + (1.0 - f_m3) * content

    result = RefinerOutput(m1, m2, m3, content, fused1, fused2, out)
    cache = dict(
        inputs=(ip, ie, il),
        enc_pre=enc_pre,
        enc_cache=enc_cache,
        fuu_cache=fuu_cache,
        dec_pre=dec_pre,
        dec_cache=dec_cache,
        enc_shapes=[e.shape[2:] for e in enc_out],
        head_kernel=head_kernel,
        head_cache=head_cache,
        act=act,
        fusion_masks=(f_m1, f_m2, f_m3),
        overridden=masks is not None,
        result=result,
    )
    return result, cache


def backward(grad_out: np.ndarray, cache, w: RefinerWeights):
    """Backpropagate ``dLoss/dOutput`` through fusion and network.

    Returns ``(param_grads, (d_ip, d_ie, d_il))`` where ``param_grads`` is a
    :class:`RefinerWeights` holding gradients in place of weights.  Masks
    overridden in the forward pass block gradient flow into the heads.
    """
    ip, ie, il = cache["inputs"]
    res = cache["result"]
    f_m1, f_m2, f_m3 = cache["fusion_masks"]
    L = w.levels

    d_f2 = f_m3 * grad_out
    d_content = (1.0 - f_m3) * grad_out
    d_m3 = ((res.fused2 - res.content) * grad_out).sum(axis=1, keepdims=True)
    d_f1 = f_m2 * d_f2
    d_il = (1.0 - f_m2) * d_f2
    d_m2 = ((res.fused1 - il) * d_f2).sum(axis=1, keepdims=True)
    d_ip = f_m1 * d_f1
    d_ie = (1.0 - f_m1) * d_f1
    d_m1 = ((ip - ie) * d_f1).sum(axis=1, keepdims=True)
    if cache["overridden"]:
        d_m1 = np.zeros_like(d_m1)
        d_m2 = np.zeros_like(d_m2)
        d_m3 = np.zeros_like(d_m3)

    act = cache["act"]
    d_act = np.concatenate([d_m1, d_m2, d_m3, d_content], axis=1)
    d_head_pre = d_act * act * (1.0 - act)
    d_dec0, dk, db = conv_backward(d_head_pre, cache["head_cache"], cache["head_kernel"])

    grads = w.zeros_like()
    start = 0
    for name in HEAD_NAMES:
        n = grads.heads[name].out_channels
        grads.heads[name].kernel[...] = dk[start : start + n]
        grads.heads[name].bias[...] = db[start : start + n]
        start += n

    enc_shapes = cache["enc_shapes"]
    d_dec = [None] * L
    d_upd = [None] * L
    d_dec[0] = d_dec0
    for m in range(L - 1):
        chans = w.encoder[m].out_channels
        d_pre = lrelu_backward(d_dec[m], cache["dec_pre"][m])
        d_cat, dk, db = conv_backward(d_pre, cache["dec_cache"][m], w.decoder[m].kernel)
        grads.decoder[m].kernel[...] = dk
        grads.decoder[m].bias[...] = db
        n_up = d_cat.shape[1] - chans
        d_up = upsample_backward(d_cat[:, :n_up], enc_shapes[m + 1])
        d_dec[m + 1] = d_up if d_dec[m + 1] is None else d_dec[m + 1] + d_up
        d_upd[m] = d_cat[:, n_up:]
    # d_{L-1} is u_{L-1}
    d_upd[L - 1] = d_dec[L - 1]

    d_enc = [None] * L
    for m in range(L - 1):
        d_fi, d_coarse, g = _fuu_backward(d_upd[m], cache["fuu_cache"][m])
        grads.fuu[m].z.kernel[...] = g.z.kernel
        grads.fuu[m].z.bias[...] = g.z.bias
        grads.fuu[m].q.kernel[...] = g.q.kernel
        grads.fuu[m].q.bias[...] = g.q.bias
        grads.fuu[m].r.kernel[...] = g.r.kernel
        grads.fuu[m].r.bias[...] = g.r.bias
        d_enc[m] = d_fi
        d_upd[m + 1] = d_upd[m + 1] + d_coarse
    d_enc[L - 1] = d_upd[L - 1]

    d_x = None
    for m in range(L - 1, -1, -1):
        d_pre = lrelu_backward(d_enc[m], cache["enc_pre"][m])
        d_in, dk, db = conv_backward(d_pre, cache["enc_cache"][m], w.encoder[m].kernel)
        grads.encoder[m].kernel[...] = dk
        grads.encoder[m].bias[...] = db
        if m > 0:
            d_enc[m - 1] = d_enc[m - 1] + d_in
        else:
            d_x = d_in

    d_ip = d_ip + d_x[:, 0:3]
    d_ie = d_ie + d_x[:, 3:6]
    d_il = d_il + d_x[:, 6:9]
    return grads, (d_ip, d_ie, d_il)


@dataclass
class RefinerResult:
    """Single-frame view of a forward pass, masks as ``(H, W)`` arrays."""

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    content: Frame
    output: Frame


def refiner_forward(ip, ie, il, w: RefinerWeights, masks=None) -> RefinerResult:
    """Fuse three inpainted frames into the final right view.

    Frames may be :class:`Frame` objects or ``(H, W, 3)`` arrays.
    """
    a, b, c = _as_batch(ip), _as_batch(ie), _as_batch(il)
    if not (a.shape == b.shape == c.shape):
        raise DimensionMismatchError("the three branch frames must have equal dimensions")
    res, _ = forward(a, b, c, w, masks=masks)
    return RefinerResult(
        res.m1[0, 0],
        res.m2[0, 0],
        res.m3[0, 0],
        Frame(res.content[0].transpose(1, 2, 0)),
        res.frame(0),
    )


def refiner_backward(ip, ie, il, w: RefinerWeights, upstream, masks=None):
    """Gradients of ``sum(upstream * output)`` for weights and the three inputs.

    ``upstream`` has the output's shape, ``(N, 3, H, W)`` or ``(H, W, 3)``.
    """
    a, b, c = _as_batch(ip), _as_batch(ie), _as_batch(il)
    g = _as_batch(upstream)
    _, cache = forward(a, b, c, w, masks=masks)
    return backward(g, cache, w)
