import numpy as np
import pytest

from gaitlab.nn import gradcheck as gc
from gaitlab.nn.layers import BatchNorm, Conv, Dense, LeakyReLU, MaxPool, Softplus, softplus_inverse

torch = pytest.importorskip("torch")


def _params(layer, rng):
    p = {layer.key(k): rng.normal(size=s) for k, s in layer.param_shapes().items()}
    for k, s in layer.buffer_shapes().items():
        p[layer.key(k)] = rng.uniform(0.5, 1.5, size=s) if k == "running_var" else rng.normal(size=s)
    return p


def _torch_reference(layer, params, x, dy, train):
    """Output and gradients of the same layer built from torch primitives."""
    t = {k: torch.tensor(v, requires_grad=True) for k, v in params.items()}
    xt = torch.tensor(x, requires_grad=True)
    if isinstance(layer, Conv):
        # (N, H, C) -> (N, C, H) for conv1d
        y = torch.nn.functional.conv1d(xt.permute(0, 2, 1), t[layer.key("weight")][..., 0],
                                       t[layer.key("bias")]).permute(0, 2, 1)
    elif isinstance(layer, BatchNorm):
        y = torch.nn.functional.batch_norm(
            xt.permute(0, 2, 1), t[layer.key("running_mean")].detach().clone(),
            t[layer.key("running_var")].detach().clone(), t[layer.key("gamma")], t[layer.key("beta")],
            training=train, eps=layer.eps).permute(0, 2, 1)
    elif isinstance(layer, MaxPool):
        y = torch.nn.functional.max_pool1d(xt.permute(0, 2, 1), layer.size).permute(0, 2, 1)
    elif isinstance(layer, LeakyReLU):
        y = torch.nn.functional.leaky_relu(xt, layer.slope)
    elif isinstance(layer, Dense):
        y = torch.nn.functional.linear(xt, t[layer.key("weight")], t[layer.key("bias")])
    else:
        y = torch.nn.functional.softplus(xt)
    y.backward(torch.tensor(dy))
    grads = {k: v.grad.numpy() for k, v in t.items() if v.grad is not None}
    return y.detach().numpy(), xt.grad.numpy(), grads


LAYERS = [
    (Conv("c1", 1, 4, 2), (3, 12, 1)),
    (Conv("c2", 3, 5, 5), (3, 12, 3)),
    (BatchNorm("bn", 4), (3, 10, 4)),
    (MaxPool("mp", 2), (3, 10, 4)),
    (MaxPool("mp3", 3), (2, 10, 3)),
    (LeakyReLU("act", 0.01), (3, 7, 4)),
    (Dense("fc", 12, 1), (4, 12)),
    (Dense("fc2", 12, 3), (4, 12)),
    (Softplus("out"), (4, 1)),
]


@pytest.mark.parametrize("train", [True, False], ids=["train", "eval"])
@pytest.mark.parametrize("layer, shape", LAYERS, ids=[f"{type(l).__name__}-{l.name}" for l, _ in LAYERS])
def test_layer_matches_torch(layer, shape, train):
    rng = np.random.default_rng(0)
    params = _params(layer, rng)
    x = rng.normal(size=shape)
    y, cache = layer.forward(params, x.copy(), train)
    dy = rng.normal(size=y.shape)
    dx, grads = layer.backward(params, dy, cache)
    ry, rdx, rgrads = _torch_reference(layer, params, x, dy, train)
    np.testing.assert_allclose(y, ry, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(dx, rdx, rtol=1e-9, atol=1e-11)
    for name, g in grads.items():
        np.testing.assert_allclose(g, rgrads[name], rtol=1e-9, atol=1e-11)


@pytest.mark.parametrize("layer, shape", LAYERS, ids=[f"{type(l).__name__}-{l.name}" for l, _ in LAYERS])
def test_layer_gradcheck(layer, shape):
    """Central differences at eps=1e-3 against the analytic backward pass."""
    rng = np.random.default_rng(1)
    params = _params(layer, rng)
    x = rng.normal(size=shape)
    r = rng.normal(size=layer.forward(params, x.copy(), True)[0].shape)

    def loss():
        return float(np.sum(layer.forward(params, x.copy(), True)[0] * r))

    y, cache = layer.forward(params, x.copy(), True)
    dx, grads = layer.backward(params, r, cache)
    worst = gc.check_array(loss, x, dx)
    for k in layer.param_shapes():
        worst = max(worst, gc.check_array(loss, params[layer.key(k)], grads[layer.key(k)]))
    assert worst < 1e-4


def test_batchnorm_running_update():
    bn = BatchNorm("bn", 2, momentum=0.1)
    params = {"bn.gamma": np.ones(2), "bn.beta": np.zeros(2),
              "bn.running_mean": np.zeros(2), "bn.running_var": np.ones(2)}
    x = np.random.default_rng(2).normal(3.0, 2.0, size=(4, 50, 2))
    _, cache = bn.forward(params, x.copy(), True)
    upd = bn.running_update(params, cache)
    np.testing.assert_allclose(upd["bn.running_mean"], 0.1 * x.mean(axis=(0, 1)))
    np.testing.assert_allclose(upd["bn.running_var"], 0.9 + 0.1 * x.var(axis=(0, 1)))
    _, cache = bn.forward(params, x.copy(), False)
    assert bn.running_update(params, cache) == {}


def test_maxpool_tie_goes_to_first():
    mp = MaxPool("mp", 2)
    x = np.ones((1, 4, 1))
    y, cache = mp.forward({}, x, True)
    dx, _ = mp.backward({}, np.ones_like(y), cache)
    assert dx[0, :, 0].tolist() == [1.0, 0.0, 1.0, 0.0]


def test_maxpool_drops_odd_tail():
    y, _ = MaxPool("mp", 2).forward({}, np.arange(5.0).reshape(1, 5, 1), False)
    assert y[0, :, 0].tolist() == [1.0, 3.0]


@pytest.mark.parametrize("shape, layer", [((2, 3, 2), Conv("c", 1, 2, 2)), ((2, 1, 1), Conv("c", 1, 2, 2)),
                                          ((2, 5), Dense("d", 4)), ((2, 1, 1), MaxPool("m", 2))])
def test_layers_reject_bad_shapes(shape, layer):
    params = _params(layer, np.random.default_rng(0))
    with pytest.raises(ValueError):
        layer.forward(params, np.zeros(shape))


@pytest.mark.parametrize("y", [1e-6, 0.5, 1.1, 30.0])
def test_softplus_inverse_roundtrip(y):
    z = softplus_inverse(y)
    assert np.logaddexp(0.0, z) == pytest.approx(y, rel=1e-12)


def test_softplus_inverse_domain():
    with pytest.raises(ValueError):
        softplus_inverse(0.0)


def test_rel_error_floor():
    assert gc.rel_error(0.0, 1e-9) == pytest.approx(1e-3)
    assert gc.rel_error(2.0, 1.0) == pytest.approx(0.5)


def test_numeric_grad_restores_entry():
    arr = np.array([1.0, 2.0])
    g = gc.numeric_grad(lambda: float(arr[0] ** 3), arr, (0,))
    assert g == pytest.approx(3.0, rel=1e-6)
    assert arr.tolist() == [1.0, 2.0]
