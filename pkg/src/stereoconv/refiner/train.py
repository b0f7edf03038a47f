"""Desk-scale Adam training of the refiner."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..config import PipelineConfig
from ..core import InputError, NumericError, OcclusionMask, seeded_rng
from ..losses import TinyExtractor, ToyCritic, adversarial_loss, content_loss, objective
from .network import RefinerWeights, backward, forward, frames_to_batch

logger = logging.getLogger(__name__)


class Adam:
    """Plain Adam over a list of arrays, updated in place."""

    def __init__(self, params, lr=1e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class Dataset:
    """Stacked training samples, ``(N, 3, H, W)`` images and ``(N, 1, H, W)`` masks."""

    ip: np.ndarray
    ie: np.ndarray
    il: np.ndarray
    mask: np.ndarray
    gt: np.ndarray

    def __len__(self):
        return self.ip.shape[0]

    def take(self, idx):
        return Dataset(self.ip[idx], self.ie[idx], self.il[idx], self.mask[idx], self.gt[idx])

    @classmethod
    def from_samples(cls, samples) -> Dataset:
        samples = list(samples)
        if not samples:
            raise InputError("training needs a non-empty dataset")
        ip, ie, il, masks, gt = zip(*samples)
        bits = [m.bits if isinstance(m, OcclusionMask) else np.asarray(m, dtype=bool) for m in masks]
        ds = cls(
            frames_to_batch(ip),
            frames_to_batch(ie),
            frames_to_batch(il),
            np.stack(bits)[:, None],
            frames_to_batch(gt),
        )
        shape = ds.ip.shape
        if not (ds.ie.shape == ds.il.shape == ds.gt.shape == shape) or ds.mask.shape[2:] != shape[2:]:
            raise InputError("training samples have inconsistent dimensions")
        return ds


@dataclass
class TrainResult:
    weights: RefinerWeights
    # one row per step: total, content, perceptual, adversarial (pre-update)
    trace: np.ndarray
    initial_content: float
    final_content: float
    extra: dict = field(default_factory=dict)

    @property
    def content_trace(self) -> np.ndarray:
        return self.trace[:, 1]


def dataset_content_loss(w: RefinerWeights, data: Dataset, alpha: float) -> float:
    res, _ = forward(data.ip, data.ie, data.il, w)
    return content_loss(res.output, data.gt, data.mask[:, 0], alpha)


def train_refiner(
    dataset,
    cfg: Optional[PipelineConfig] = None,
    seed: int = 0,
    steps: Optional[int] = None,
    weights: Optional[RefinerWeights] = None,
    extractor=None,
    critic=None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> TrainResult:
    """Minimise the total loss with Adam.

    Args:
        dataset: Sequence of ``(Ip, Ie, Il, O, Ig)`` samples or a
            :class:`Dataset`.
        cfg: Supplies learning rate, betas, loss weights, batch size, channel
            plan and whether the adversarial term is on.
        seed: Seeds weight init, the critic and minibatch order.
        steps: Overrides ``cfg.train_steps``.
        weights: Starting weights; a fresh seeded init when omitted.
        extractor: Perceptual feature extractor with a ``vjp`` method;
            defaults to :class:`TinyExtractor`.
        critic: Discriminator used when ``cfg.adversarial`` is on; defaults to
            a seeded :class:`ToyCritic`.  It is trained alternately to
            increase ``mean(D(fake)) - mean(D(real))``.
    """
    cfg = cfg or PipelineConfig()
    data = dataset if isinstance(dataset, Dataset) else Dataset.from_samples(dataset)
    if len(data) == 0:
        raise InputError("training needs a non-empty dataset")
    steps = cfg.train_steps if steps is None else steps
    w = weights.copy() if weights is not None else RefinerWeights.init(cfg.channels, seed, cfg.kernel_size)
    extractor = extractor or TinyExtractor()
    if cfg.adversarial and critic is None:
        critic = ToyCritic(seed=seed + 1)
    if not cfg.adversarial:
        critic = None

    rng = seeded_rng(seed)
    opt = Adam(w.params(), cfg.learning_rate, cfg.beta1, cfg.beta2)
    critic_opt = Adam(critic.params(), cfg.learning_rate, cfg.beta1, cfg.beta2) if critic else None

    n = len(data)
    batch = min(cfg.batch_size, n)
    initial = dataset_content_loss(w, data, cfg.alpha)
    trace = np.zeros((steps, 4))
    order = np.empty(0, dtype=np.int64)
    for step in range(steps):
        if batch == n:
            idx = np.arange(n)
        else:
            if order.size < batch:
                order = np.concatenate([order, rng.permutation(n)])
            idx, order = order[:batch], order[batch:]
        b = data.take(idx)

        res, cache = forward(b.ip, b.ie, b.il, w)
        total, parts, grad = objective(res.output, b.gt, b.mask[:, 0], cfg, extractor, critic)
        if not np.isfinite(total):
            raise NumericError(f"loss became non-finite at step {step}")
        trace[step] = (total, *parts)
        grads, _ = backward(grad, cache, w)
        opt.step(grads.params())

        if critic is not None:
            k = len(idx)
            _, g_fake = critic.backward(res.output, np.full(k, -1.0 / k))
            _, g_real = critic.backward(b.gt, np.full(k, 1.0 / k))
            critic_opt.step([a + c for a, c in zip(g_fake, g_real)])

        if callback is not None:
            callback(step, trace[step])
        if step % 100 == 0:
            logger.debug("step %d total %.6f content %.6f", step, total, parts[0])

    final = dataset_content_loss(w, data, cfg.alpha)
    extra = {}
    if critic is not None:
        res, _ = forward(data.ip, data.ie, data.il, w)
        extra["final_adversarial"] = adversarial_loss(critic(res.output), critic(data.gt))
    return TrainResult(w, trace, initial, final, extra)
