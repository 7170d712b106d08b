import numpy as np
import pytest

from conftest import SMALL_SPEC
from gaitlab.nn import (Model, ModelFormatError, ModelSpec, TrainConfig, build_model,
                        feature_parameters, fine_tune, load_model, save_model, train)
from gaitlab.nn import gradcheck as gc
from gaitlab.nn.serialize import from_bytes, to_bytes
from gaitlab.nn.train import Adam, SGD


def _batch(spec=SMALL_SPEC, b=4, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(b, spec.input_len, spec.n_columns)), rng.uniform(0.3, 1.5, b)


def _torch_loss(model, x, y, train):
    torch = pytest.importorskip("torch")
    F = torch.nn.functional
    t = {k: torch.tensor(v, requires_grad=True) for k, v in model.params.items()}
    b, length, cols = x.shape
    h = torch.tensor(x).permute(0, 2, 1).reshape(b * cols, 1, length)
    for i in (1, 2, 3):
        h = F.conv1d(h, t[f"block{i}.conv.weight"][..., 0], t[f"block{i}.conv.bias"])
        h = F.batch_norm(h, torch.tensor(model.buffers[f"block{i}.bn.running_mean"]),
                         torch.tensor(model.buffers[f"block{i}.bn.running_var"]),
                         t[f"block{i}.bn.gamma"], t[f"block{i}.bn.beta"], training=train,
                         eps=model.spec.bn_eps)
        # the reference applies activation before pooling, as usually written
        h = F.max_pool1d(F.leaky_relu(h, model.spec.leaky_slope), model.spec.pool)
    flat = h.permute(0, 2, 1).reshape(b, -1)
    pred = F.softplus(F.linear(flat, t["fc.weight"], t["fc.bias"]))[:, 0]
    loss = torch.mean((pred - torch.tensor(y)) ** 2)
    loss.backward()
    return pred.detach().numpy(), float(loss.detach()), {k: v.grad.numpy() for k, v in t.items()}


@pytest.mark.parametrize("train_mode", [True, False], ids=["train", "eval"])
def test_model_matches_torch(small_model, train_mode):
    x, y = _batch()
    small_model.buffers["block2.bn.running_mean"][:] = 0.3
    pred = small_model.forward(x, train=train_mode)
    loss, grads, _ = small_model.loss_and_grads(x, y, bn_train=train_mode)
    ref_pred, ref_loss, ref_grads = _torch_loss(small_model, x, y, train_mode)
    np.testing.assert_allclose(pred, ref_pred, rtol=1e-10)
    assert loss == pytest.approx(ref_loss, rel=1e-10)
    for name in small_model.params:
        np.testing.assert_allclose(grads[name], ref_grads[name], rtol=1e-7, atol=1e-12, err_msg=name)


def test_model_gradcheck_small_step(small_model):
    # at eps=1e-6 no kink is crossed and the analytic gradients are exact
    x, y = _batch()
    errs = gc.check_model(small_model, x, y, per_tensor=10, eps=1e-6)
    assert max(errs.values()) < 1e-4, errs


def test_spec_shapes():
    spec = ModelSpec()
    assert spec.feature_len() == 96
    assert spec.flat_dim() == 6 * 96 * 64 == 36864
    assert ModelSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("kwargs", [dict(kernels=(3, 5, 5)), dict(filters=(1, 2)), dict(input_len=10)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        ModelSpec(**kwargs)


def test_model_validates_tensors(small_model):
    params = dict(small_model.params)
    params["fc.weight"] = np.zeros((1, 3))
    with pytest.raises(ValueError, match="fc.weight"):
        Model(SMALL_SPEC, params, small_model.buffers)
    with pytest.raises(ValueError):
        small_model.freeze(["nope"])
    with pytest.raises(ValueError):
        small_model.forward(np.zeros((2, 5, 6)))


def test_output_init_sets_prediction():
    model = build_model(SMALL_SPEC, seed=0, output_init=0.7)
    model.params["fc.weight"][:] = 0.0
    np.testing.assert_allclose(model.forward(_batch()[0]), 0.7)


def test_predict_batches_equal_forward(small_model):
    x, _ = _batch(b=7)
    np.testing.assert_allclose(small_model.predict(x, batch_size=3), small_model.forward(x), rtol=1e-13)
    assert small_model.predict(np.zeros((0, 40, 6))).shape == (0,)


def test_build_model_deterministic():
    a, b = build_model(SMALL_SPEC, seed=5), build_model(SMALL_SPEC, seed=5)
    for k in a.params:
        np.testing.assert_array_equal(a.params[k], b.params[k])


def test_frozen_features_skip_backprop(small_model):
    x, y = _batch()
    _, full, _ = small_model.loss_and_grads(x, y, bn_train=False)
    small_model.freeze(feature_parameters(small_model))
    _, partial, _ = small_model.loss_and_grads(x, y, bn_train=False)
    assert set(partial) == {"fc.weight", "fc.bias"}
    np.testing.assert_array_equal(partial["fc.weight"], full["fc.weight"])


def test_serialize_roundtrip(tmp_path, small_model):
    small_model.freeze(["block1.conv.bias"])
    path = tmp_path / "m.bin"
    save_model(small_model, path)
    back = load_model(path)
    assert back.spec == small_model.spec and back.frozen == small_model.frozen
    for store in ("params", "buffers"):
        for k, v in getattr(small_model, store).items():
            np.testing.assert_array_equal(getattr(back, store)[k], v)
    assert to_bytes(back) == to_bytes(small_model)


@pytest.mark.parametrize("cut", [4, 20, -8])
def test_serialize_truncated(small_model, cut):
    raw = to_bytes(small_model)
    with pytest.raises(ModelFormatError):
        from_bytes(raw[:cut])


def test_serialize_wrong_version(small_model):
    raw = to_bytes(small_model).replace(b'"version": 1', b'"version": 9')
    with pytest.raises(ModelFormatError, match="version"):
        from_bytes(raw)


def test_serialize_shape_mismatch_names_tensor(small_model):
    other = build_model(ModelSpec(input_len=44, filters=(2, 3, 4)))
    raw = to_bytes(other).replace(b'"input_len": 44', b'"input_len": 40')
    with pytest.raises(ModelFormatError, match="fc.weight"):
        from_bytes(raw)


def test_train_reduces_loss_and_is_deterministic(small_model):
    x, y = _batch(b=16, seed=3)
    cfg = TrainConfig(learning_rate=1e-3, batch_size=8, epochs=6, optimizer="adam", seed=1)
    m1, h1 = train(small_model, x, y, x, y, cfg)
    m2, h2 = train(small_model, x, y, x, y, cfg)
    assert h1[-1].train_loss < h1[0].train_loss
    assert h1 == h2
    for k in m1.params:
        np.testing.assert_array_equal(m1.params[k], m2.params[k])
    # the input model is left untouched unless in_place
    assert not np.array_equal(m1.params["fc.weight"], small_model.params["fc.weight"])


def test_sgd_step():
    params = {"w": np.array([1.0, 2.0])}
    SGD(TrainConfig(learning_rate=0.5)).step(params, {"w": np.array([2.0, -2.0])}, ["w"])
    assert params["w"].tolist() == [0.0, 3.0]


def test_adam_first_step_is_lr_sign():
    params = {"w": np.array([1.0, 2.0])}
    Adam(TrainConfig(learning_rate=0.1, optimizer="adam")).step(params, {"w": np.array([5.0, -1e-3])}, ["w"])
    np.testing.assert_allclose(params["w"], [0.9, 2.1], rtol=1e-6)


@pytest.mark.parametrize("step, total, factor", [(0, 10, 1.0), (5, 10, 0.5), (10, 10, 0.0), (3, 0, 1.0)])
def test_cosine_schedule(step, total, factor):
    cfg = TrainConfig(learning_rate=2.0, schedule="cosine", fc_lr_scale=0.25)
    assert cfg.rate_factor(step, total) == pytest.approx(factor, abs=1e-15)
    rates = cfg.rates(["block1.conv.weight", "fc.weight"], step, total)
    assert rates == pytest.approx({"block1.conv.weight": 2.0 * factor, "fc.weight": 0.5 * factor})


def test_constant_schedule_ignores_step():
    assert TrainConfig(learning_rate=0.3).rates(["fc.bias"], 7, 9) == {"fc.bias": 0.3}


def test_per_parameter_rates():
    params = {"a": np.array([1.0]), "b": np.array([1.0])}
    grads = {"a": np.array([1.0]), "b": np.array([1.0])}
    SGD(TrainConfig()).step(params, grads, ["a", "b"], {"a": 0.5, "b": 0.25})
    assert params["a"][0] == 0.5 and params["b"][0] == 0.75
    opt = Adam(TrainConfig(optimizer="adam"))
    opt.step(params, grads, ["a", "b"], {"a": 0.1, "b": 0.0})
    assert params["a"][0] == pytest.approx(0.4) and params["b"][0] == 0.75


@pytest.mark.parametrize("kwargs", [dict(learning_rate=-1.0), dict(batch_size=0), dict(optimizer="rms"),
                                    dict(schedule="step"), dict(fc_lr_scale=-1.0)])
def test_train_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_train_rejects_bad_data(small_model):
    x, y = _batch()
    with pytest.raises(ValueError):
        train(small_model, x[:0], y[:0])
    with pytest.raises(ValueError):
        train(small_model, x, y[:2])


def test_fine_tune_changes_only_fc(small_model):
    x, y = _batch(b=8, seed=4)
    tuned, hist = fine_tune(small_model, x, y, TrainConfig(learning_rate=1e-2, batch_size=8, epochs=5,
                                                           optimizer="adam"))
    for name in feature_parameters(small_model):
        assert np.array_equal(tuned.params[name], small_model.params[name]), name
    for name in small_model.buffers:
        assert np.array_equal(tuned.buffers[name], small_model.buffers[name]), name
    assert not np.array_equal(tuned.params["fc.weight"], small_model.params["fc.weight"])
    assert hist[-1].train_loss < hist[0].train_loss
