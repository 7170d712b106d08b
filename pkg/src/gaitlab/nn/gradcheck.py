"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

from typing import Callable

import numpy as np

EPS = 1e-3
# gradients below this scale are compared absolutely; conv biases feeding a
# train-mode BN, for example, have an exact gradient of zero
GRAD_FLOOR = 1e-6


def rel_error(analytic, numeric, floor: float = GRAD_FLOOR) -> np.ndarray:
    a, n = np.asarray(analytic), np.asarray(numeric)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def numeric_grad(f: Callable[[], float], arr: np.ndarray, index, eps: float = EPS) -> float:
    """``(f(x + eps) - f(x - eps)) / 2 eps`` for one entry, restoring it after."""
    old = arr[index]
    arr[index] = old + eps
    up = f()
    arr[index] = old - eps
    down = f()
    arr[index] = old
    return (up - down) / (2 * eps)


def check_array(f, arr, analytic, indices=None, eps: float = EPS, floor: float = GRAD_FLOOR) -> float:
    """Max relative error over ``indices`` (all entries when None)."""
    if indices is None:
        indices = list(np.ndindex(arr.shape))
    worst = 0.0
    for idx in indices:
        num = numeric_grad(f, arr, idx, eps)
        worst = max(worst, float(rel_error(analytic[idx], num, floor)))
    return worst


def sample_indices(shape, count: int, rng: np.random.Generator) -> list[tuple]:
    size = int(np.prod(shape))
    flat = rng.choice(size, size=min(count, size), replace=False)
    return [np.unravel_index(int(i), shape) for i in np.sort(flat)]


def check_model(model, x, y, per_tensor: int | None = None, seed: int = 0,
                eps: float = EPS) -> dict[str, float]:
    """Worst relative error per parameter tensor of a model's MSE loss.

    Every entry is checked when ``per_tensor`` is None, otherwise that many
    entries drawn at random from each tensor.
    """
    _, grads, _ = model.loss_and_grads(x, y, bn_train=True)
    y = np.asarray(y, dtype=np.float64)

    def loss():
        return float(np.mean((model.forward(x, train=True) - y) ** 2))

    rng = np.random.default_rng(seed)
    out = {}
    for name, arr in model.params.items():
        idx = None if per_tensor is None else sample_indices(arr.shape, per_tensor, rng)
        out[name] = check_array(loss, arr, grads[name], idx, eps)
    return out
