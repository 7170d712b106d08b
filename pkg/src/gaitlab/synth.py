"""Parametric ground-truth gait generator, IMU error model and augmenter.

A walk is a sequence of strides. During stance the foot is flat and at rest;
during swing it travels the stride length along a minimum-crackle path, lifts
along a smooth sin^4 clearance bump and pitches toe-down then toe-up. All
event times are snapped to the sample grid so annotations are exact.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import quat
from .types import GRAVITY, Foot, GaitType, ImuTrial, StrideAnnotation

GAIT_CODES = {GaitType.NORMAL: 0, GaitType.SHUFFLE: 1, GaitType.STROKE: 2}
FOOT_CODES = {Foot.LEFT: 0, Foot.RIGHT: 1}
DEFAULT_RATE_HZ = 200.0
PAD_S = 2.5

# strides per trial at desk scale: short normal passes, longer pathological ones
DEFAULT_STRIDES = {GaitType.NORMAL: 6, GaitType.SHUFFLE: 14, GaitType.STROKE: 10}


def seed_for(*key: int) -> int:
    """Stable 63-bit seed for a tuple of non-negative integers."""
    ss = np.random.SeedSequence(entropy=int(key[0]), spawn_key=tuple(int(k) for k in key[1:]))
    return int(ss.generate_state(2, dtype=np.uint32).astype(np.uint64) @ np.array([1 << 31, 1], dtype=np.uint64))


@dataclass(frozen=True)
class GaitProfile:
    gait_type: GaitType
    mean_stride_length_m: float
    stride_length_std_m: float
    mean_stride_time_s: float
    stance_fraction: float
    clearance_m: float
    pitch_peak_deg: float = 25.0
    stride_time_cv: float = 0.03
    boundary_step_factor: float = 1.0
    # stroke: one dragging foot
    drag_side: Optional[Foot] = None
    drag_length_factor: float = 1.0
    drag_clearance_factor: float = 1.0
    drag_swing_factor: float = 1.0
    # toe drag: the dragging foot nearly stops mid-swing on some strides
    drag_pause_prob: float = 0.0
    drag_pause_speed: float = 0.01
    # shuffle: mixture of small, occasional large and frozen (tiny) strides
    p_big: float = 0.0
    big_stride_factor: float = 1.0
    p_freeze: float = 0.0
    freeze_length_m: tuple = (0.01, 0.06)

    def __post_init__(self):
        object.__setattr__(self, "gait_type", GaitType(self.gait_type))
        if self.drag_side is not None:
            object.__setattr__(self, "drag_side", Foot(self.drag_side))
        if min(self.mean_stride_length_m, self.stride_length_std_m, self.clearance_m,
               self.pitch_peak_deg) < 0:
            raise ValueError("lengths and amplitudes must be non-negative")
        if not self.mean_stride_time_s > 0:
            raise ValueError("mean_stride_time_s must be positive")
        if not 0.45 < self.stance_fraction < 0.85:
            raise ValueError("stance_fraction must lie in (0.45, 0.85)")
        for name in ("drag_length_factor", "drag_clearance_factor", "drag_swing_factor"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not (0 <= self.p_big < 1 and 0 <= self.p_freeze < 1):
            raise ValueError("stride mixture probabilities must lie in [0, 1)")
        if not (0 <= self.drag_pause_prob <= 1 and 0 < self.drag_pause_speed <= 1):
            raise ValueError("invalid drag pause settings")
        if self.big_stride_factor < 1:
            raise ValueError("big_stride_factor must be >= 1")

    @property
    def cadence_steps_per_min(self) -> float:
        return 120.0 / self.mean_stride_time_s

    def foot_factors(self, foot: Foot) -> tuple[float, float, float]:
        """(length, clearance, swing-time) multipliers for ``foot``."""
        if self.drag_side is not None and Foot(foot) == self.drag_side:
            return self.drag_length_factor, self.drag_clearance_factor, self.drag_swing_factor
        return 1.0, 1.0, 1.0


# population-level gait targets: (mean length, between-subject sd, within-trial sd)
_COHORT = {
    GaitType.NORMAL: (1.11, 0.09, 0.08),
    GaitType.SHUFFLE: (0.433, 0.06, 0.20),
    GaitType.STROKE: (0.599, 0.085, 0.08),
}


def sample_profile(gait_type, subject_seed: int) -> GaitProfile:
    """Draw one subject's gait profile; deterministic in ``subject_seed``."""
    gait_type = GaitType(gait_type)
    rng = np.random.default_rng([int(subject_seed), GAIT_CODES[gait_type]])
    mean, between, within = _COHORT[gait_type]
    length = max(0.1, mean + between * rng.standard_normal())
    within = within * float(np.exp(0.15 * rng.standard_normal()))
    tempo = float(np.exp(0.06 * rng.standard_normal()))
    # longer-striding subjects lift and pitch the foot more
    amp = length / mean
    if gait_type is GaitType.NORMAL:
        return GaitProfile(gait_type, length, within, 1.10 * tempo,
                           stance_fraction=float(np.clip(0.60 + 0.015 * rng.standard_normal(), 0.55, 0.66)),
                           clearance_m=0.12 * amp, pitch_peak_deg=25.0 * amp, stride_time_cv=0.025,
                           boundary_step_factor=0.72)
    if gait_type is GaitType.SHUFFLE:
        return GaitProfile(gait_type, length, within, 0.86 * tempo,
                           stance_fraction=float(np.clip(0.62 + 0.015 * rng.standard_normal(), 0.56, 0.68)),
                           clearance_m=0.035 * amp, pitch_peak_deg=9.0 * amp, stride_time_cv=0.06,
                           boundary_step_factor=0.9,
                           p_big=0.12, big_stride_factor=1.9, p_freeze=0.12)
    drag = Foot.LEFT if rng.random() < 0.5 else Foot.RIGHT
    return GaitProfile(gait_type, length, within, 1.30 * tempo,
                       stance_fraction=float(np.clip(0.60 + 0.015 * rng.standard_normal(), 0.55, 0.66)),
                       clearance_m=0.09 * amp, pitch_peak_deg=20.0 * amp, stride_time_cv=0.035,
                       boundary_step_factor=0.9, drag_side=drag,
                       drag_length_factor=0.95, drag_clearance_factor=0.35,
                       drag_swing_factor=0.7, drag_pause_prob=0.7)


def stride_lengths(profile: GaitProfile, n: int, rng: np.random.Generator) -> np.ndarray:
    """Per-stride lengths whose within-trial spread matches the profile."""
    mean, sd = profile.mean_stride_length_m, profile.stride_length_std_m
    if mean == 0:
        return np.zeros(n)
    if profile.p_big == 0 and profile.p_freeze == 0:
        out = mean + sd * rng.standard_normal(n)
        return np.maximum(out, 0.05 * mean)

    pf, pb, b = profile.p_freeze, profile.p_big, profile.big_stride_factor
    lo, hi = profile.freeze_length_m
    frozen_mean = 0.5 * (lo + hi)
    frozen_sq = (lo * lo + lo * hi + hi * hi) / 3.0
    mix = (1 - pb) + pb * b
    mix_sq = (1 - pb) + pb * b * b
    small = max((mean - pf * frozen_mean) / ((1 - pf) * mix), 1e-3)
    cv_sq = ((sd * sd + mean * mean - pf * frozen_sq) / ((1 - pf) * small * small * mix_sq)) - 1.0
    cv = float(np.sqrt(max(cv_sq, 0.0)))

    u = rng.random(n)
    jitter = 1.0 + cv * rng.standard_normal(n)
    base = np.where(u < pb, b * small, small) * jitter
    frozen = rng.uniform(lo, hi, n)
    state = rng.random(n)
    out = np.where(state < pf, frozen, base)
    return np.maximum(out, lo)


def _minimum_crackle(s):
    # position, velocity and acceleration with zero rate, acceleration, jerk
    # and snap at both ends, so trapezoidal double integration of the sampled
    # acceleration is exact to O(dt^6)
    return s ** 5 * (126 - 420 * s + 540 * s * s - 315 * s ** 3 + 70 * s ** 4), \
        630 * s ** 4 * (1 - s) ** 4, \
        2520 * s ** 3 * (1 - s) ** 3 * (1 - 2 * s)


def _clearance(s):
    # sin^4 bump: zero height, speed and acceleration at both ends
    sp, cp = np.sin(np.pi * s), np.cos(np.pi * s)
    return sp ** 4, 4 * np.pi * sp ** 3 * cp, 4 * np.pi ** 2 * sp * sp * (3 * cp * cp - sp * sp)


def _plateau_series(lead: int = 3, tail: int = 8) -> np.ndarray:
    """Cosine-series coefficients of the pause plateau ``b(s)``.

    ``b = I_x(lead, tail)`` at ``x = sin^2(pi s)``, the regularised incomplete
    beta function, which is a polynomial in ``x`` for integer arguments. It is 0
    and flat to order ``2 lead`` at both ends of the swing and 1 across a wide
    middle. Returns ``beta`` with ``b(s) = beta_0 + 2 sum_j beta_j cos(2 pi j s)``.
    """
    m = lead + tail - 1
    x = np.array([-0.25, 0.5, -0.25])  # sin^2 as coefficients of e^{-i t}, 1, e^{i t}
    one_minus = np.array([0.25, 0.5, 0.25])  # cos^2
    total = np.zeros(2 * m + 1)
    for j in range(lead, m + 1):
        term = np.array([float(math.comb(m, j))])
        for _ in range(j):
            term = np.convolve(term, x)
        for _ in range(m - j):
            term = np.convolve(term, one_minus)
        total += term
    return total[m:]


_PLATEAU = _plateau_series()


def _pause_warp(s, speed):
    """Time warp tau(s) of a swing that crawls at ``speed`` through its middle.

    ``tau' = (1 - k b(s)) / c`` with ``k = 1 - speed`` and ``b`` the smooth
    plateau above, so the warped path keeps its smooth end states. Returns
    tau, tau' and tau''.
    """
    k = 1.0 - speed
    j = np.arange(1, _PLATEAU.size)
    w = 2 * np.pi * j
    arg = np.multiply.outer(s, w)
    b = _PLATEAU[0] + 2 * np.cos(arg) @ _PLATEAU[1:]
    big_b = _PLATEAU[0] * s + 2 * np.sin(arg) @ (_PLATEAU[1:] / w)
    db = -2 * np.sin(arg) @ (_PLATEAU[1:] * w)
    c = 1.0 - k * _PLATEAU[0]
    return (s - k * big_b) / c, (1 - k * b) / c, -k * db / c


def _trapezoid_travel(acc, dt):
    """Distance from rest by trapezoidal double integration of ``acc``."""
    vel = np.concatenate([[0.0], np.cumsum(0.5 * (acc[1:] + acc[:-1]) * dt)])
    return float(np.sum(0.5 * (vel[1:] + vel[:-1]) * dt))


_PITCH_PEAK = 1.299038105676658  # max of sin(2 pi s) - sin(4 pi s) / 2


def _pitch(s):
    f = np.sin(2 * np.pi * s) - 0.5 * np.sin(4 * np.pi * s)
    df = 2 * np.pi * (np.cos(2 * np.pi * s) - np.cos(4 * np.pi * s))
    return f / _PITCH_PEAK, df / _PITCH_PEAK


@dataclass(frozen=True, eq=False)
class FootKinematics:
    """Sampled world-frame ground truth of one foot (x forward, z up)."""

    sample_rate_hz: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    pitch: np.ndarray
    pitch_rate: np.ndarray
    annotations: list = field(default_factory=list)


def foot_kinematics(profile: GaitProfile, n_strides: int,
                    sample_rate_hz: float = DEFAULT_RATE_HZ, seed: int = 0,
                    foot: Foot = Foot.LEFT) -> FootKinematics:
    if n_strides < 1:
        raise ValueError("n_strides must be >= 1")
    if sample_rate_hz < 50:
        raise ValueError("sample rate must be >= 50 Hz")
    foot = Foot(foot)
    rate = float(sample_rate_hz)
    # timing is shared by both feet of a walk; lengths are drawn per foot
    walk = np.random.default_rng([int(seed), 7])
    own = np.random.default_rng([int(seed), 11, FOOT_CODES[foot]])

    stride_t = profile.mean_stride_time_s * (1 + profile.stride_time_cv * walk.standard_normal(n_strides))
    stride_t = np.maximum(stride_t, 0.5 * profile.mean_stride_time_s)
    n_stride = np.round(stride_t * rate).astype(int)
    length_f, clear_f, swing_f = profile.foot_factors(foot)
    n_swing = np.maximum(np.round((1 - profile.stance_fraction) * swing_f * n_stride).astype(int), 4)
    n_stance = np.maximum(n_stride - n_swing, 4)

    lengths = stride_lengths(profile, n_strides, own) * length_f
    dragging = profile.drag_side is not None and foot == profile.drag_side
    paused = (own.random(n_strides) < profile.drag_pause_prob) if dragging else np.zeros(n_strides, bool)
    if n_strides >= 2:
        lengths[0] *= profile.boundary_step_factor
        lengths[-1] *= profile.boundary_step_factor
    mean_len = profile.mean_stride_length_m
    scale = np.clip(lengths / mean_len, 0.0, 1.6) if mean_len > 0 else np.zeros(n_strides)

    pad = int(round(PAD_S * rate))
    offset = int(round(0.5 * n_stride[0])) if foot is Foot.RIGHT else 0
    total = pad + offset + int(np.sum(n_stance + n_swing)) + pad + 1
    # left gets trailing room equal to the right foot's offset so both feet
    # of a walk have equal length
    total += int(round(0.5 * n_stride[0])) - offset

    pos = np.zeros((total, 3))
    vel = np.zeros((total, 3))
    acc = np.zeros((total, 3))
    pitch = np.zeros(total)
    rate_p = np.zeros(total)
    annotations = []
    x = 0.0
    hs = pad + offset - n_stance[0]
    hs = max(hs, 1)
    peak = np.deg2rad(profile.pitch_peak_deg) * clear_f
    for k in range(n_strides):
        to = hs + n_stance[k]
        nxt = to + n_swing[k]
        pos[hs:to + 1, 0] = x
        T = n_swing[k] / rate
        s = np.arange(n_swing[k] + 1) / n_swing[k]
        L = lengths[k]
        c = profile.clearance_m * clear_f * scale[k]
        if paused[k]:
            tau, w1, w2 = _pause_warp(s, profile.drag_pause_speed)
        else:
            tau, w1, w2 = s, np.ones_like(s), np.zeros_like(s)
        p, dp, ddp = _minimum_crackle(tau)
        z, dz, ddz = _clearance(tau)
        th, dth = _pitch(tau)
        # chain rule through the warp
        dp, ddp = dp * w1, ddp * w1 * w1 + dp * w2
        dz, ddz = dz * w1, ddz * w1 * w1 + dz * w2
        dth = dth * w1
        sl = slice(to, nxt + 1)
        pos[sl, 0] = x + L * p
        vel[sl, 0] = L * dp / T
        acc[sl, 0] = L * ddp / T ** 2
        travel = _trapezoid_travel(acc[sl, 0], 1.0 / rate)
        if travel > 0:
            # trapezoidal double integration of the samples then returns L
            # exactly; the factor differs from 1 by O(dt^6)
            acc[sl, 0] *= L / travel
        pos[sl, 2] = c * z
        vel[sl, 2] = c * dz / T
        acc[sl, 2] = c * ddz / T ** 2
        pitch[sl] = peak * scale[k] * th
        rate_p[sl] = peak * scale[k] * dth / T
        annotations.append(StrideAnnotation.from_indices(foot, hs, to, nxt, L, rate))
        x += L
        hs = nxt
    pos[hs:, 0] = x
    # boundary samples are exactly at rest; scrub rounding residue
    for ann in annotations:
        for i in (ann.hs_index, ann.to_index, ann.next_hs_index):
            vel[i] = 0.0
            acc[i] = 0.0
            rate_p[i] = 0.0
            pitch[i] = 0.0
            pos[i, 2] = 0.0
    return FootKinematics(rate, pos, vel, acc, pitch, rate_p, annotations)


def imu_from_kinematics(kin: FootKinematics, heading_rad: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame specific force and angular rate for a pitching foot."""
    c, s = np.cos(heading_rad), np.sin(heading_rad)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    f_world = kin.acceleration @ rz.T
    f_world[:, 2] += GRAVITY
    cp, sp = np.cos(kin.pitch), np.sin(kin.pitch)
    # R = Rz(heading) Ry(pitch); body = Ry^T Rz^T world
    h = f_world @ rz            # Rz^T applied row-wise
    accel = np.stack([cp * h[:, 0] - sp * h[:, 2], h[:, 1], sp * h[:, 0] + cp * h[:, 2]], axis=1)
    gyro = np.zeros_like(accel)
    gyro[:, 1] = kin.pitch_rate
    return accel, gyro


def generate_trial(profile: GaitProfile, n_strides: int,
                   sample_rate_hz: float = DEFAULT_RATE_HZ, seed: int = 0,
                   foot: Foot = Foot.LEFT, *, subject_id: int = 1,
                   trial_index: int = 0) -> tuple[ImuTrial, list[StrideAnnotation]]:
    """Noise-free trial plus its stride annotations.

    Calling this for both feet with the same ``seed`` yields a consistent
    bilateral walk on a common time base.
    """
    kin = foot_kinematics(profile, n_strides, sample_rate_hz, seed, foot)
    accel, gyro = imu_from_kinematics(kin)
    trial = ImuTrial.from_arrays(accel, gyro, sample_rate_hz, subject_id=subject_id,
                                 gait_type=profile.gait_type, foot=Foot(foot),
                                 trial_index=trial_index)
    return trial, kin.annotations


@dataclass(frozen=True)
class SensorNoiseConfig:
    accel_noise_std: float = 0.0
    gyro_noise_std: float = 0.0
    accel_bias_walk_std: float = 0.0
    gyro_bias_walk_std: float = 0.0
    accel_initial_bias: float = 0.0
    gyro_initial_bias: float = 0.0
    mount_misalignment_deg: float = 0.0

    def __post_init__(self):
        if any(v < 0 for v in asdict(self).values()):
            raise ValueError("noise parameters must be non-negative")

    @classmethod
    def default(cls) -> "SensorNoiseConfig":
        """Consumer-grade shoe IMU."""
        return cls(accel_noise_std=0.25, gyro_noise_std=0.025,
                   accel_bias_walk_std=0.02, gyro_bias_walk_std=0.002,
                   accel_initial_bias=0.15, gyro_initial_bias=0.02,
                   mount_misalignment_deg=3.0)

    def is_zero(self) -> bool:
        return all(v == 0 for v in asdict(self).values())


def _stream(seed: int, name: str) -> np.random.Generator:
    code = {"accel_noise": 1, "gyro_noise": 2, "accel_walk": 3, "gyro_walk": 4,
            "accel_bias": 5, "gyro_bias": 6, "mount": 7}[name]
    return np.random.default_rng([int(seed), 101, code])


def bias_walk(n: int, step_std: float, sample_rate_hz: float, seed: int, kind: str) -> np.ndarray:
    """Random-walk bias path ``(n, 3)`` starting at zero; ``kind`` is accel or gyro."""
    rng = _stream(seed, f"{kind}_walk")
    steps = step_std * np.sqrt(1.0 / sample_rate_hz) * rng.standard_normal((n, 3))
    steps[0] = 0.0
    return np.cumsum(steps, axis=0)


def mount_rotation(cfg: SensorNoiseConfig, seed: int) -> np.ndarray:
    rng = _stream(seed, "mount")
    axis = rng.standard_normal(3)
    return quat.axis_angle_matrix(axis, np.deg2rad(cfg.mount_misalignment_deg))


def apply_sensor_model(ideal: ImuTrial, cfg: SensorNoiseConfig, seed: int) -> ImuTrial:
    """Corrupt an ideal trial with mount error, biases and white noise."""
    if cfg.is_zero():
        return ideal
    n, rate = len(ideal), ideal.sample_rate_hz
    accel, gyro = ideal.accel.copy(), ideal.gyro.copy()
    if cfg.mount_misalignment_deg > 0:
        r = mount_rotation(cfg, seed)
        # sensor frame = body frame rotated by r
        accel, gyro = accel @ r, gyro @ r
    if cfg.accel_initial_bias > 0:
        accel += _stream(seed, "accel_bias").uniform(-1, 1, 3) * cfg.accel_initial_bias
    if cfg.gyro_initial_bias > 0:
        gyro += _stream(seed, "gyro_bias").uniform(-1, 1, 3) * cfg.gyro_initial_bias
    if cfg.accel_bias_walk_std > 0:
        accel += bias_walk(n, cfg.accel_bias_walk_std, rate, seed, "accel")
    if cfg.gyro_bias_walk_std > 0:
        gyro += bias_walk(n, cfg.gyro_bias_walk_std, rate, seed, "gyro")
    if cfg.accel_noise_std > 0:
        accel += cfg.accel_noise_std * _stream(seed, "accel_noise").standard_normal((n, 3))
    if cfg.gyro_noise_std > 0:
        gyro += cfg.gyro_noise_std * _stream(seed, "gyro_noise").standard_normal((n, 3))
    return ideal.replace(accel=accel, gyro=gyro)


def rotate_about_gravity(trial: ImuTrial, yaw_rad: float, rest_samples: int | None = None) -> ImuTrial:
    """Rotate the sensor frame about the gravity direction seen at rest.

    The navigation frame then turns about the vertical, so horizontal
    displacements keep their length.
    """
    if yaw_rad == 0.0:
        return trial
    if rest_samples is None:
        rest_samples = max(1, int(trial.sample_rate_hz))
    g = trial.accel[:rest_samples].mean(axis=0)
    r = quat.axis_angle_matrix(g, yaw_rad)
    return trial.replace(accel=trial.accel @ r, gyro=trial.gyro @ r)


def augment(trial: ImuTrial, annotations: Sequence[StrideAnnotation], seed: int, *,
            yaw_deg: float | None = None,
            noise: SensorNoiseConfig | None = None) -> tuple[ImuTrial, list[StrideAnnotation]]:
    """Label-preserving copy of a trial.

    Applies a rotation about gravity (random when ``yaw_deg`` is None) and a
    fresh draw of sensor errors from ``noise`` (a light default when None).
    Sample indices are untouched, so annotations carry over verbatim.
    """
    rng = np.random.default_rng([int(seed), 202])
    if yaw_deg is None:
        yaw_deg = float(rng.uniform(-180.0, 180.0))
    if noise is None:
        noise = SensorNoiseConfig(accel_noise_std=0.05, gyro_noise_std=0.005,
                                  accel_initial_bias=0.05, gyro_initial_bias=0.005)
    out = rotate_about_gravity(trial, np.deg2rad(yaw_deg))
    out = apply_sensor_model(out, noise, int(rng.integers(2 ** 62)))
    return out, list(annotations)


def augment_batch(pool: Sequence[tuple[ImuTrial, Sequence[StrideAnnotation]]], count: int,
                  seed: int, **kwargs) -> list[tuple[ImuTrial, list[StrideAnnotation]]]:
    """``count`` augmented sequences drawn round-robin from ``pool``."""
    if not pool:
        raise ValueError("empty pool")
    return [augment(*pool[i % len(pool)], seed=seed_for(seed, 303, i), **kwargs)
            for i in range(count)]


@dataclass
class Dataset:
    trials: list
    manifest: dict

    def __len__(self):
        return len(self.trials)

    def subjects(self) -> list[int]:
        return sorted({t.subject_id for t, _ in self.trials})

    def select(self, *, subjects=None, gait_types=None) -> list:
        out = []
        for trial, anns in self.trials:
            if subjects is not None and trial.subject_id not in subjects:
                continue
            if gait_types is not None and trial.gait_type not in gait_types:
                continue
            out.append((trial, anns))
        return out


def generate_dataset(n_subjects: int, trials_per_pattern: int,
                     cfg: SensorNoiseConfig | None = None, master_seed: int = 0, *,
                     sample_rate_hz: float = DEFAULT_RATE_HZ,
                     strides: dict | None = None,
                     profile_fn=sample_profile) -> Dataset:
    """Synthetic cohort: one profile per (subject, gait), both feet per trial."""
    if n_subjects < 2:
        raise ValueError("n_subjects must be >= 2")
    if trials_per_pattern < 1:
        raise ValueError("trials_per_pattern must be >= 1")
    cfg = SensorNoiseConfig.default() if cfg is None else cfg
    strides = {GaitType(k): int(v) for k, v in (strides or DEFAULT_STRIDES).items()}
    entries = []
    for subject in range(1, n_subjects + 1):
        subject_seed = seed_for(master_seed, subject)
        for gait in GaitType:
            for r in range(trials_per_pattern):
                walk_seed = seed_for(master_seed, subject, GAIT_CODES[gait], r)
                for foot in Foot:
                    entries.append({
                        "subject_id": subject, "gait_type": gait.value, "foot": foot.value,
                        "trial_index": r, "subject_seed": subject_seed,
                        "walk_seed": walk_seed,
                        "noise_seed": seed_for(master_seed, subject, GAIT_CODES[gait], r,
                                               FOOT_CODES[foot]),
                        "n_strides": strides[gait],
                    })
    manifest = {
        "n_subjects": n_subjects, "trials_per_pattern": trials_per_pattern,
        "master_seed": master_seed, "sample_rate_hz": sample_rate_hz,
        "noise": asdict(cfg), "trials": entries,
    }
    return regenerate(manifest, profile_fn=profile_fn)


def regenerate(manifest: dict, profile_fn=sample_profile) -> Dataset:
    """Rebuild a dataset from the seeds recorded in its manifest."""
    cfg = SensorNoiseConfig(**manifest["noise"])
    rate = manifest["sample_rate_hz"]
    profiles = {}
    trials = []
    for e in manifest["trials"]:
        key = (e["subject_seed"], e["gait_type"])
        if key not in profiles:
            profiles[key] = profile_fn(GaitType(e["gait_type"]), e["subject_seed"])
        ideal, anns = generate_trial(profiles[key], e["n_strides"], rate, e["walk_seed"],
                                     Foot(e["foot"]), subject_id=e["subject_id"],
                                     trial_index=e["trial_index"])
        trials.append((apply_sensor_model(ideal, cfg, e["noise_seed"]), anns))
    return Dataset(trials, manifest)


def shifted_profile(gait_type, subject_seed: int) -> GaitProfile:
    """Elderly-like cohort: shorter, slower strides with less foot lift.

    Used as the target domain for transfer learning.
    """
    base = sample_profile(gait_type, subject_seed)
    rng = np.random.default_rng([int(subject_seed), 909])
    length = max(0.2, 0.80 + 0.10 * rng.standard_normal())
    if base.gait_type is GaitType.SHUFFLE:
        length *= 0.6
    return replace(base, mean_stride_length_m=length,
                   stride_length_std_m=0.75 * base.stride_length_std_m,
                   mean_stride_time_s=base.mean_stride_time_s * 1.18,
                   clearance_m=base.clearance_m * 0.6,
                   pitch_peak_deg=base.pitch_peak_deg * 0.7)
