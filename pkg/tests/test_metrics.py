import numpy as np
import pytest

from gaitlab import metrics
from gaitlab.types import Foot, StrideAnnotation


def test_rmse_known_value():
    assert metrics.rmse([1.0, 2.0, 3.0], [1.0, 2.0, 5.0]) == pytest.approx(np.sqrt(4 / 3))


def test_rmse_identical_is_zero():
    assert metrics.rmse([0.4, 0.5], [0.4, 0.5]) == 0.0


@pytest.mark.parametrize("p, t", [([1.0], [1.0, 2.0]), ([], []), ([np.inf], [1.0])])
def test_rmse_rejects_bad_input(p, t):
    with pytest.raises(ValueError):
        metrics.rmse(p, t)


def test_mae_mse_consistent_with_rmse():
    rng = np.random.default_rng(1)
    p, t = rng.random(20), rng.random(20)
    mae, mse = metrics.mae_mse(p, t)
    assert mse == pytest.approx(metrics.rmse(p, t) ** 2, abs=1e-12)
    assert mae == pytest.approx(np.mean(np.abs(p - t)))


def test_mean_std_is_population():
    assert metrics.mean_std([1.0, 3.0]) == (2.0, 1.0)


def test_quartiles_and_tukey():
    v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 100.0]
    q1, q2, q3 = metrics.quartiles(v)
    assert (q1, q2, q3) == (2.75, 4.5, 6.25)
    assert metrics.tukey_outliers(v) == [7]


def test_tukey_needs_four_values():
    with pytest.raises(ValueError):
        metrics.tukey_outliers([1.0, 2.0, 3.0])


def test_stride_variance():
    assert metrics.stride_variance([1.0, 1.0, 1.0]) == 0.0
    assert metrics.stride_variance([0.0, 2.0]) == 1.0
    with pytest.raises(ValueError):
        metrics.stride_variance([1.0])


def _walk(foot, offset, n=4, stride=100, stance=60, length=1.0):
    return [StrideAnnotation.from_indices(foot, offset + k * stride, offset + k * stride + stance,
                                          offset + (k + 1) * stride, length, 100.0) for k in range(n)]


def test_gait_parameters_symmetric_walk():
    left, right = _walk(Foot.LEFT, 0), _walk(Foot.RIGHT, 50)
    gp = metrics.gait_parameters(left, right, 100.0)
    # two heel strikes per second
    assert gp.cadence_steps_per_min == pytest.approx(120.0, rel=0.02)
    assert gp.swing_stance_ratio == pytest.approx(40 / 60)
    assert gp.symmetry_index == 0.0
    # stances of 60 offset by 50 overlap 10 samples twice per cycle
    assert gp.double_support_time_s == pytest.approx(0.2)


def test_gait_parameters_asymmetric():
    left, right = _walk(Foot.LEFT, 0), _walk(Foot.RIGHT, 50, stance=70)
    gp = metrics.gait_parameters(left, right, 100.0)
    assert gp.symmetry_index > 0
    assert gp.per_foot_swing_stance_ratio["Right"] == pytest.approx(30 / 70)


def test_gait_parameters_needs_both_feet():
    with pytest.raises(ValueError):
        metrics.gait_parameters(_walk(Foot.LEFT, 0), [], 100.0)
