import numpy as np
import pytest

from gaitlab import synth
from gaitlab.nn import ModelSpec, build_model
from gaitlab.types import Foot, GaitType, ImuTrial


# a narrow CNN keeps unit tests fast; the acceptance suite uses the full size
SMALL_SPEC = ModelSpec(input_len=40, filters=(2, 3, 4))


@pytest.fixture
def small_model():
    return build_model(SMALL_SPEC, seed=3, output_init=0.8)


@pytest.fixture(params=list(GaitType), ids=lambda g: g.value)
def gait(request):
    return request.param


def ideal_trial(gait_type=GaitType.NORMAL, n_strides=10, seed=0, foot=Foot.LEFT, subject_seed=1):
    profile = synth.sample_profile(gait_type, subject_seed)
    return synth.generate_trial(profile, n_strides, seed=seed, foot=foot)


def triangle_trial(rate=200.0, accel=2.0, half_s=0.25, rest_s=1.0):
    """Flat foot at rest, +accel for half_s then -accel for half_s, rest again.

    Samples are chosen so the trapezoid rule integrates the profile exactly:
    displacement is accel * half_s**2 (0.125 m for the defaults).
    """
    rest, m = int(round(rest_s * rate)), int(round(half_s * rate))
    n = 2 * rest + 2 * m
    ax = np.zeros(n)
    ax[rest:rest + m] = accel
    ax[rest + m:rest + 2 * m] = -accel
    acc = np.zeros((n, 3))
    acc[:, 0] = ax
    acc[:, 2] = 9.81
    trial = ImuTrial.from_arrays(acc, np.zeros((n, 3)), rate)
    mask = np.ones(n, dtype=bool)
    mask[rest:rest + 2 * m] = False
    return trial, mask


# acceptance criterion number -> (passed, detail); printed after the run
ACCEPTANCE: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    old = ACCEPTANCE.get(number)
    if old is not None:
        passed = passed and old[0]
        detail = f"{old[1]}; {detail}"
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
