"""Mini-batch training, FC-only fine-tuning and optimisers."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Model, feature_parameters

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    batch_size: int = 64
    epochs: int = 10
    seed: int = 0
    optimizer: str = "sgd"
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # multiplier on the rate of the fully connected layer; its 36864 weights
    # each move by about one rate per Adam step, so the output moves far
    # faster than through any conv weight
    fc_lr_scale: float = 1.0
    schedule: str = "constant"

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if not self.fc_lr_scale >= 0:
            raise ValueError("fc_lr_scale must be non-negative")

    def rate_factor(self, step: int, total: int) -> float:
        """Schedule multiplier for optimiser step ``step`` of ``total``."""
        if self.schedule == "cosine" and total > 0:
            return 0.5 * (1.0 + np.cos(np.pi * step / total))
        return 1.0

    def rates(self, names, step: int = 0, total: int = 0) -> dict[str, float]:
        base = self.learning_rate * self.rate_factor(step, total)
        return {n: base * (self.fc_lr_scale if n.startswith("fc.") else 1.0) for n in names}


class SGD:
    def __init__(self, cfg: TrainConfig):
        self.lr, self.momentum = cfg.learning_rate, cfg.momentum
        self.velocity = {}

    def step(self, params: dict, grads: dict, names, rates: dict | None = None) -> None:
        for n in names:
            g = grads[n]
            lr = self.lr if rates is None else rates[n]
            if self.momentum:
                v = self.velocity.get(n)
                v = g if v is None else self.momentum * v + g
                self.velocity[n] = v
                g = v
            params[n] -= lr * g


class Adam:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m, self.v = {}, {}

    def step(self, params: dict, grads: dict, names, rates: dict | None = None) -> None:
        c = self.cfg
        self.t += 1
        corr1 = 1 - c.beta1 ** self.t
        corr2 = 1 - c.beta2 ** self.t
        for n in names:
            g = grads[n]
            m = self.m[n] = c.beta1 * self.m.get(n, 0.0) + (1 - c.beta1) * g
            v = self.v[n] = c.beta2 * self.v.get(n, 0.0) + (1 - c.beta2) * g * g
            lr = c.learning_rate if rates is None else rates[n]
            params[n] -= lr * (m / corr1) / (np.sqrt(v / corr2) + c.adam_eps)


def make_optimizer(cfg: TrainConfig):
    return Adam(cfg) if cfg.optimizer == "adam" else SGD(cfg)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float | None


def evaluate_loss(model: Model, x, y, batch_size: int = 128) -> float:
    pred = model.predict(x, batch_size)
    return float(np.mean((pred - np.asarray(y)) ** 2))


def train(model: Model, x_train, y_train, x_val=None, y_val=None,
          cfg: TrainConfig = TrainConfig(), bn_train: bool = True,
          in_place: bool = False) -> tuple[Model, list[EpochRecord]]:
    """Fit ``model`` by mini-batch descent on the MSE loss.

    Batch order comes from ``cfg.seed`` and the epoch number only. The train
    loss of an epoch is the sample-weighted mean of its batch losses.
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64).ravel()
    if x_train.shape[0] == 0:
        raise ValueError("empty training set")
    if x_train.shape[0] != y_train.size:
        raise ValueError("inputs and targets differ in length")
    if not in_place:
        model = model.copy()
    opt = make_optimizer(cfg)
    names = model.trainable()
    history = []
    n = y_train.size
    total_steps = cfg.epochs * -(-n // cfg.batch_size)
    k = 0
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([int(cfg.seed), epoch, 31]).permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = np.sort(order[start:start + cfg.batch_size])
            loss, grads, updates = model.loss_and_grads(x_train[idx], y_train[idx], bn_train)
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}")
            opt.step(model.params, grads, names, cfg.rates(names, k, total_steps))
            k += 1
            model.buffers.update(updates)
            total += loss * idx.size
        val = evaluate_loss(model, x_val, y_val) if x_val is not None and len(x_val) else None
        history.append(EpochRecord(epoch, total / n, val))
        log.info("epoch %d train %.5f val %s", epoch, total / n, val)
    return model, history


def fine_tune(model: Model, x_support, y_support, cfg: TrainConfig) -> tuple[Model, list[EpochRecord]]:
    """Refit only the fully connected layer; BN stays in inference mode."""
    tuned = model.copy()
    tuned.freeze(feature_parameters(tuned))
    return train(tuned, x_support, y_support, cfg=cfg, bn_train=False, in_place=True)


def write_history_csv(path, history) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for r in history:
            w.writerow([r.epoch, repr(r.train_loss), "" if r.val_loss is None else repr(r.val_loss)])
