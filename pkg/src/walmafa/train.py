"""Adam with cosine annealing, single training steps, and a small training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import TrainConfig
from .errors import InputError, NumericError
from .model import ModelConfig, compute_losses, forward
from .params import ParamStore


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def cosine_lr(step: int, total: int, lr_max: float, lr_min: float) -> float:
    """Cosine annealing from ``lr_max`` at step 0 to ``lr_min`` at ``total``."""
    if total <= 0:
        return lr_max
    frac = min(step, total) / total
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * frac))


def gradients(params: ParamStore, low, high, config: ModelConfig, trace: dict | None = None):
    """Loss record and name → gradient for every trainable entry."""
    tensors = params.tensors()
    outputs = forward(low, tensors, config, trace=trace)
    losses = compute_losses(*outputs, high, config)
    record = losses.as_floats()
    if not all(math.isfinite(v) for v in record.values()):
        raise NumericError(f"non-finite loss {record}; stage RMS norms: {trace}")
    losses.total.backward()
    grads = {}
    for name, t in tensors.items():
        if params.is_trainable(name):
            grads[name] = t.grad if t.grad is not None else np.zeros_like(t.data)
    return record, grads


def adam_update(params: ParamStore, grads: dict, state: AdamState, lr: float,
                beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    state.step += 1
    t = state.step
    for name, g in grads.items():
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - beta1) * g if m is None else beta1 * m + (1 - beta1) * g
        v = (1 - beta2) * g * g if v is None else beta2 * v + (1 - beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        params.set(name, params[name] - lr * m_hat / (np.sqrt(v_hat) + eps))


def train_step(params: ParamStore, low, high, state: AdamState, config: ModelConfig,
               train: TrainConfig, total_steps: int | None = None) -> dict:
    """One Adam step on the total loss of a (B, H, W, 3) batch; updates ``params`` in place.

    The learning rate follows the cosine schedule evaluated at the current
    step count. The returned record holds the four losses and ``lr``.
    """
    total_steps = train.steps if total_steps is None else total_steps
    lr = cosine_lr(state.step, total_steps, train.learning_rate, train.min_learning_rate)
    trace: dict = {}
    record, grads = gradients(params, low, high, config, trace)
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for {name}; stage RMS norms: {trace}")
    adam_update(params, grads, state, lr, train.beta1, train.beta2, train.adam_eps)
    record["lr"] = lr
    return record


def random_crops(pairs, size: int, count: int, rng: np.random.Generator):
    """Sample ``count`` aligned crops of side ``size`` from (low, high) pairs."""
    lows, highs = [], []
    for _ in range(count):
        low, high = pairs[rng.integers(len(pairs))]
        h, w = low.shape[:2]
        if h < size or w < size:
            raise InputError(f"image {(h, w)} smaller than crop {size}")
        y, x = rng.integers(h - size + 1), rng.integers(w - size + 1)
        lows.append(low[y:y + size, x:x + size])
        highs.append(high[y:y + size, x:x + size])
    return np.stack(lows), np.stack(highs)


def evaluate(params: ParamStore, pairs, config: ModelConfig) -> dict:
    """Mean losses over full (unbatched) pairs without recording gradients."""
    totals: dict = {}
    for low, high in pairs:
        out = forward(low, params, config)
        rec = compute_losses(*out, high, config).as_floats()
        for k, v in rec.items():
            totals[k] = totals.get(k, 0.0) + v / len(pairs)
    return totals


def fit(params: ParamStore, pairs, config: ModelConfig, train: TrainConfig,
        val_pairs=None, log: Callable[[int, dict], None] | None = None):
    """Train for ``train.steps`` steps on random crops.

    Returns ``(history, best_params)`` where best_params is the snapshot
    with the lowest validation Charbonnier loss (evaluated every
    ``eval_every`` steps and after the last step).
    """
    if not pairs:
        raise InputError("training set is empty")
    if train.crop % config.size_multiple:
        raise InputError(f"crop {train.crop} must be divisible by {config.size_multiple}")
    val_pairs = pairs if val_pairs is None else val_pairs
    rng = np.random.default_rng(train.seed)
    state = AdamState()
    history = []
    best, best_score = params.copy(), evaluate(params, val_pairs, config)["charbonnier"]
    for step in range(train.steps):
        low, high = random_crops(pairs, train.crop, train.batch_size, rng)
        low = low.astype(params[next(iter(params))].dtype)
        high = high.astype(low.dtype)
        record = train_step(params, low, high, state, config, train)
        record["step"] = step
        history.append(record)
        if log is not None:
            log(step, record)
        if (step + 1) % train.eval_every == 0 or step + 1 == train.steps:
            score = evaluate(params, val_pairs, config)["charbonnier"]
            record["val_charbonnier"] = score
            if score < best_score:
                best, best_score = params.copy(), score
    return history, best
