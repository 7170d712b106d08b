"""Architecture description, parameter store and forward/backward passes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .layers import BatchNorm, Conv, Dense, LeakyReLU, MaxPool, Softplus, softplus_inverse

KERNELS = (2, 5, 5)


@dataclass(frozen=True)
class ModelSpec:
    """Three Conv-BN-LeakyReLU-MaxPool blocks, FC to one unit, Softplus.

    The input window is one ``input_len x n_columns`` plane; kernels are
    ``k x 1`` so they slide along time only and the FC layer mixes columns.
    """

    input_len: int = 800
    n_columns: int = 6
    filters: tuple = (16, 32, 64)
    kernels: tuple = KERNELS
    pool: int = 2
    leaky_slope: float = 0.01
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))
        object.__setattr__(self, "kernels", tuple(int(k) for k in self.kernels))
        if self.kernels != KERNELS:
            raise ValueError(f"kernel heights must be {KERNELS}, got {self.kernels}")
        if len(self.filters) != 3 or min(self.filters) < 1:
            raise ValueError("need three positive filter counts")
        if self.feature_len() < 1:
            raise ValueError(f"input_len {self.input_len} too short for the conv stack")

    def feature_len(self) -> int:
        h = self.input_len
        for k in self.kernels:
            h = (h - k + 1) // self.pool
        return h

    def flat_dim(self) -> int:
        return self.n_columns * self.feature_len() * self.filters[-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filters"], d["kernels"] = list(self.filters), list(self.kernels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


def build_layers(spec: ModelSpec) -> list:
    layers = []
    c_in = 1
    for i, (k, c_out) in enumerate(zip(spec.kernels, spec.filters), start=1):
        # LeakyReLU is strictly increasing, so it commutes exactly with max
        # pooling; pooling first halves the work of the activation
        layers += [Conv(f"block{i}.conv", c_in, c_out, k),
                   BatchNorm(f"block{i}.bn", c_out, spec.bn_eps, spec.bn_momentum),
                   MaxPool(f"block{i}.pool", spec.pool),
                   LeakyReLU(f"block{i}.act", spec.leaky_slope)]
        c_in = c_out
    layers += [Dense("fc", spec.flat_dim(), 1), Softplus("out")]
    return layers


@dataclass(eq=False)
class Model:
    spec: ModelSpec
    params: dict
    buffers: dict
    frozen: set = field(default_factory=set)

    def __post_init__(self):
        self.layers = build_layers(self.spec)
        expected_p, expected_b = expected_shapes(self.spec)
        for store, expected, kind in ((self.params, expected_p, "parameter"),
                                      (self.buffers, expected_b, "buffer")):
            if set(store) != set(expected):
                raise ValueError(f"{kind} names {sorted(store)} do not match spec {sorted(expected)}")
            for name, shape in expected.items():
                if tuple(store[name].shape) != shape:
                    raise ValueError(f"{kind} {name!r} has shape {store[name].shape}, spec needs {shape}")
        unknown = set(self.frozen) - set(self.params)
        if unknown:
            raise ValueError(f"cannot freeze unknown parameters {sorted(unknown)}")
        self.frozen = set(self.frozen)

    # parameters and buffers are looked up by the layers through one mapping
    def tensors(self) -> dict:
        return {**self.params, **self.buffers}

    def trainable(self) -> list[str]:
        return [n for n in self.params if n not in self.frozen]

    def copy(self) -> "Model":
        return Model(self.spec, {k: v.copy() for k, v in self.params.items()},
                     {k: v.copy() for k, v in self.buffers.items()}, set(self.frozen))

    def freeze(self, names) -> None:
        names = set(names)
        unknown = names - set(self.params)
        if unknown:
            raise ValueError(f"cannot freeze unknown parameters {sorted(unknown)}")
        self.frozen |= names

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        want = (self.spec.input_len, self.spec.n_columns)
        if x.ndim != 3 or x.shape[1:] != want:
            raise ValueError(f"batch must be (B, {want[0]}, {want[1]}), got {x.shape}")
        return x

    def _run(self, x, train):
        x = self._check_input(x)
        b = x.shape[0]
        tensors = self.tensors()
        h = x.transpose(0, 2, 1).reshape(b * self.spec.n_columns, self.spec.input_len, 1)
        caches = []
        for layer in self.layers:
            if isinstance(layer, Dense):
                h = h.reshape(b, -1)
            h, cache = layer.forward(tensors, h, train)
            caches.append(cache)
        return h[:, 0], caches

    def forward(self, x, train: bool = False) -> np.ndarray:
        """Predicted stride lengths ``(B,)``; BN uses batch stats when ``train``."""
        return self._run(x, train)[0]

    def predict(self, x, batch_size: int = 128) -> np.ndarray:
        x = self._check_input(x)
        if x.shape[0] == 0:
            return np.empty(0)
        return np.concatenate([self.forward(x[i:i + batch_size])
                               for i in range(0, x.shape[0], batch_size)])

    def loss_and_grads(self, x, y, bn_train: bool = True):
        """MSE loss, gradients of every parameter and BN running-stat updates."""
        y = np.asarray(y, dtype=np.float64).ravel()
        pred, caches = self._run(x, bn_train)
        if pred.shape != y.shape:
            raise ValueError(f"{y.size} targets for {pred.size} predictions")
        err = pred - y
        loss = float(np.mean(err ** 2))
        tensors = self.tensors()
        grads, updates = {}, {}
        d = (2.0 / y.size * err)[:, None]
        # below the lowest layer with a trainable parameter nothing needs a
        # gradient, so backprop stops there (frozen features cost no backward)
        trainable = set(self.trainable())
        lowest = next((i for i, layer in enumerate(self.layers)
                       if {layer.key(k) for k in layer.param_shapes()} & trainable), len(self.layers))
        for i, (layer, cache) in enumerate(zip(reversed(self.layers), reversed(caches))):
            if len(self.layers) - 1 - i < lowest:
                break
            if d.ndim == 2 and not isinstance(layer, (Dense, Softplus)):
                d = d.reshape(-1, self.spec.feature_len(), self.spec.filters[-1])
            d, g = layer.backward(tensors, d, cache)
            grads.update(g)
            if isinstance(layer, BatchNorm):
                updates.update(layer.running_update(tensors, cache))
        return loss, grads, updates


def expected_shapes(spec: ModelSpec) -> tuple[dict, dict]:
    params, buffers = {}, {}
    for layer in build_layers(spec):
        params.update({layer.key(k): tuple(s) for k, s in layer.param_shapes().items()})
        buffers.update({layer.key(k): tuple(s) for k, s in layer.buffer_shapes().items()})
    return params, buffers


def build_model(spec: ModelSpec = ModelSpec(), seed: int = 0,
                output_init: float | None = None) -> Model:
    """Fresh model with He-uniform conv weights.

    ``output_init`` sets the FC bias so an all-zero feature vector predicts
    that value (typically the mean training label).
    """
    rng = np.random.default_rng([int(seed), 4242])
    params, buffers = {}, {}
    gain = np.sqrt(2.0 / (1 + spec.leaky_slope ** 2))
    for layer in build_layers(spec):
        for local, shape in layer.param_shapes().items():
            name = layer.key(local)
            if isinstance(layer, Conv) and local == "weight":
                bound = gain * np.sqrt(3.0 / (layer.c_in * layer.k))
                params[name] = rng.uniform(-bound, bound, shape)
            elif isinstance(layer, Dense) and local == "weight":
                bound = 1.0 / np.sqrt(layer.d_in)
                params[name] = rng.uniform(-bound, bound, shape)
            elif local == "gamma":
                params[name] = np.ones(shape)
            elif isinstance(layer, Dense) and local == "bias":
                params[name] = np.full(shape, softplus_inverse(output_init) if output_init else 0.0)
            else:
                params[name] = np.zeros(shape)
        for local, shape in layer.buffer_shapes().items():
            buffers[layer.key(local)] = np.ones(shape) if local == "running_var" else np.zeros(shape)
    return Model(spec, params, buffers)


def feature_parameters(model: Model) -> list[str]:
    """Everything except the final fully connected layer."""
    return [n for n in model.params if not n.startswith("fc.")]
