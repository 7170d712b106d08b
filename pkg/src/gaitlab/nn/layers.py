"""Layers of the stride-length CNN with hand-written backward passes.

Activations are held channels-last as ``(N, H, C)``: ``N`` independent
sequences (batch x sensor column), ``H`` time steps and ``C`` feature planes.
A ``k x 1`` Conv2D over an ``H x W`` image is exactly a 1-D convolution of
each of the ``W`` columns, so the image width is folded into ``N``.

Every layer exposes ``forward(params, x, train) -> (y, cache)`` and
``backward(params, dy, cache) -> (dx, grads)``; neither mutates state.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    name: str = ""

    def param_shapes(self) -> dict[str, tuple]:
        return {}

    def buffer_shapes(self) -> dict[str, tuple]:
        return {}

    def key(self, local: str) -> str:
        return f"{self.name}.{local}"


class Conv(Layer):
    """Valid ``k x 1`` convolution along time; weight shape ``(C_out, C_in, k, 1)``."""

    def __init__(self, name, c_in, c_out, k):
        self.name, self.c_in, self.c_out, self.k = name, c_in, c_out, k

    def param_shapes(self):
        return {"weight": (self.c_out, self.c_in, self.k, 1), "bias": (self.c_out,)}

    def _wmat(self, params):
        # rows ordered (tap, c_in) to match the column layout built in forward
        return params[self.key("weight")][..., 0].transpose(2, 1, 0).reshape(-1, self.c_out)

    def forward(self, params, x, train=False):
        n, h, c = x.shape
        if c != self.c_in:
            raise ValueError(f"{self.name}: expected {self.c_in} input planes, got {c}")
        ho = h - self.k + 1
        if ho < 1:
            raise ValueError(f"{self.name}: input length {h} shorter than kernel {self.k}")
        if c == 1:
            # a single input plane: k broadcast multiply-adds beat a thin matmul
            w = params[self.key("weight")][:, 0, :, 0]
            y = np.empty((n, ho, self.c_out))
            np.multiply(x[:, 0:ho], w[:, 0], out=y)
            for j in range(1, self.k):
                y += x[:, j:j + ho] * w[:, j]
            y += params[self.key("bias")]
            return y, (x, x.shape)
        cols = sliding_window_view(x, self.k, axis=1).transpose(0, 1, 3, 2).reshape(n * ho, self.k * c)
        y = cols @ self._wmat(params) + params[self.key("bias")]
        return y.reshape(n, ho, self.c_out), (cols, x.shape)

    def backward(self, params, dy, cache):
        cols, (n, h, c) = cache
        ho = h - self.k + 1
        d2 = dy.reshape(n * ho, self.c_out)
        db = d2.sum(axis=0)
        if c == 1:
            x = cols
            dw = np.stack([np.einsum("nho,nh->o", dy, x[:, j:j + ho, 0]) for j in range(self.k)],
                          axis=1)[:, None, :, None]
            w = params[self.key("weight")][:, 0, :, 0]
            dx = np.zeros((n, h, 1))
            for j in range(self.k):
                dx[:, j:j + ho, 0] += dy @ w[:, j]
            return dx, {self.key("weight"): dw, self.key("bias"): db}
        dw = (cols.T @ d2).reshape(self.k, c, self.c_out).transpose(2, 1, 0)[..., None]
        dcols = (d2 @ self._wmat(params).T).reshape(n, ho, self.k, c)
        dx = np.zeros((n, h, c))
        for j in range(self.k):
            dx[:, j:j + ho, :] += dcols[:, :, j, :]
        return dx, {self.key("weight"): np.ascontiguousarray(dw), self.key("bias"): db}


class BatchNorm(Layer):
    """Per-plane normalisation over all sequences and time steps."""

    def __init__(self, name, c, eps=1e-5, momentum=0.1):
        self.name, self.c, self.eps, self.momentum = name, c, eps, momentum

    def param_shapes(self):
        return {"gamma": (self.c,), "beta": (self.c,)}

    def buffer_shapes(self):
        return {"running_mean": (self.c,), "running_var": (self.c,)}

    def forward(self, params, x, train=False):
        gamma, beta = params[self.key("gamma")], params[self.key("beta")]
        if train:
            m = x.shape[0] * x.shape[1]
            mean = x.reshape(m, -1).sum(axis=0) / m
            xhat = x - mean
            var = np.einsum("nhc,nhc->c", xhat, xhat) / m
        else:
            mean = params[self.key("running_mean")]
            var = params[self.key("running_var")]
            xhat = x - mean
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat *= inv
        y = xhat * gamma
        y += beta
        return y, (xhat, inv, train, mean, var)

    def running_update(self, params, cache) -> dict[str, np.ndarray]:
        _, _, train, mean, var = cache
        if not train:
            return {}
        m = self.momentum
        return {self.key("running_mean"): (1 - m) * params[self.key("running_mean")] + m * mean,
                self.key("running_var"): (1 - m) * params[self.key("running_var")] + m * var}

    def backward(self, params, dy, cache):
        xhat, inv, train, _, _ = cache
        gamma = params[self.key("gamma")]
        m = dy.shape[0] * dy.shape[1]
        dgamma = np.einsum("nhc,nhc->c", dy, xhat)
        dbeta = dy.reshape(m, -1).sum(axis=0)
        grads = {self.key("gamma"): dgamma, self.key("beta"): dbeta}
        scale = gamma * inv
        dx = dy * scale
        if train:
            # dx = scale * (dy - mean(dy) - xhat * mean(dy * xhat))
            dx -= xhat * (scale * dgamma / m)
            dx -= scale * dbeta / m
        return dx, grads


class LeakyReLU(Layer):
    def __init__(self, name, slope=0.01):
        self.name, self.slope = name, slope

    def forward(self, params, x, train=False):
        pos = x > 0
        y = x * self.slope
        np.copyto(y, x, where=pos)
        return y, pos

    def backward(self, params, dy, pos):
        dx = dy * self.slope
        np.copyto(dx, dy, where=pos)
        return dx, {}


class MaxPool(Layer):
    """Non-overlapping pooling along time; a trailing odd sample is dropped."""

    def __init__(self, name, size=2):
        self.name, self.size = name, size

    def forward(self, params, x, train=False):
        n, h, c = x.shape
        ho = h // self.size
        if ho < 1:
            raise ValueError(f"{self.name}: input length {h} shorter than pool size")
        if self.size == 2:
            a, b = x[:, 0:2 * ho:2], x[:, 1:2 * ho:2]
            first = a >= b
            y = b.copy()
            np.copyto(y, a, where=first)
            return y, (first, x.shape)
        blocks = x[:, :ho * self.size].reshape(n, ho, self.size, c)
        arg = blocks.argmax(axis=2)
        y = np.take_along_axis(blocks, arg[:, :, None, :], axis=2)[:, :, 0, :]
        return y, (arg, x.shape)

    def backward(self, params, dy, cache):
        arg, (n, h, c) = cache
        ho = h // self.size
        if self.size == 2:
            dx = np.zeros((n, h, c))
            np.copyto(dx[:, 0:2 * ho:2], dy, where=arg)
            np.copyto(dx[:, 1:2 * ho:2], dy, where=~arg)
            return dx, {}
        dblocks = np.zeros((n, ho, self.size, c))
        np.put_along_axis(dblocks, arg[:, :, None, :], dy[:, :, None, :], axis=2)
        dx = np.zeros((n, h, c))
        dx[:, :ho * self.size] = dblocks.reshape(n, ho * self.size, c)
        return dx, {}


class Dense(Layer):
    """Fully connected layer on flat ``(B, D)`` input; weight ``(out, in)``."""

    def __init__(self, name, d_in, d_out=1):
        self.name, self.d_in, self.d_out = name, d_in, d_out

    def param_shapes(self):
        return {"weight": (self.d_out, self.d_in), "bias": (self.d_out,)}

    def forward(self, params, x, train=False):
        if x.shape[1] != self.d_in:
            raise ValueError(f"{self.name}: expected {self.d_in} inputs, got {x.shape[1]}")
        return x @ params[self.key("weight")].T + params[self.key("bias")], x

    def backward(self, params, dy, x):
        grads = {self.key("weight"): dy.T @ x, self.key("bias"): dy.sum(axis=0)}
        return dy @ params[self.key("weight")], grads


class Softplus(Layer):
    def __init__(self, name):
        self.name = name

    def forward(self, params, x, train=False):
        return np.logaddexp(0.0, x), x

    def backward(self, params, dy, x):
        # d/dz log(1 + e^z) is the logistic function
        return dy * np.exp(-np.logaddexp(0.0, -x)), {}


def softplus_inverse(y: float) -> float:
    if not y > 0:
        raise ValueError("softplus range is (0, inf)")
    return float(y + np.log(-np.expm1(-y)))
