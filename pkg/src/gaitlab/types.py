"""Domain value objects shared by every stage of the pipeline."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

GRAVITY = 9.81

CHANNELS = ("ax", "ay", "az", "gx", "gy", "gz")


class GaitType(str, enum.Enum):
    NORMAL = "Normal"
    SHUFFLE = "Shuffle"
    STROKE = "Stroke"


class Foot(str, enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"


class ImuSample(NamedTuple):
    t: float
    accel: np.ndarray
    gyro: np.ndarray


@dataclass(frozen=True, eq=False)
class ImuTrial:
    """A uniformly sampled six-channel foot IMU recording.

    ``accel`` is the gravity-inclusive specific force (m/s^2) and ``gyro`` the
    angular rate (rad/s), both in the sensor frame, shaped ``(n, 3)``.
    """

    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    sample_rate_hz: float
    subject_id: int = 1
    gait_type: GaitType = GaitType.NORMAL
    foot: Foot = Foot.LEFT
    trial_index: int = 0

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        accel = np.asarray(self.accel, dtype=np.float64)
        gyro = np.asarray(self.gyro, dtype=np.float64)
        if t.ndim != 1 or accel.shape != (t.size, 3) or gyro.shape != (t.size, 3):
            raise ValueError(
                f"inconsistent shapes t{t.shape} accel{accel.shape} gyro{gyro.shape}")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if not (np.all(np.isfinite(accel)) and np.all(np.isfinite(gyro))):
            raise ValueError("non-finite sensor values")
        if t.size > 1:
            dt = np.diff(t)
            if np.any(dt < 0):
                raise ValueError("time stamps must be non-decreasing")
            if np.max(np.abs(dt - 1.0 / self.sample_rate_hz)) > 1e-9:
                raise ValueError("trial is not uniformly sampled at sample_rate_hz")
        for arr in (t, accel, gyro):
            arr.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "accel", accel)
        object.__setattr__(self, "gyro", gyro)
        object.__setattr__(self, "gait_type", GaitType(self.gait_type))
        object.__setattr__(self, "foot", Foot(self.foot))

    def __len__(self):
        return self.t.size

    @property
    def data(self) -> np.ndarray:
        """``(n, 6)`` array in ``CHANNELS`` order."""
        return np.hstack([self.accel, self.gyro])

    @property
    def samples(self) -> list[ImuSample]:
        return [ImuSample(float(self.t[i]), self.accel[i], self.gyro[i])
                for i in range(len(self))]

    def replace(self, **changes) -> "ImuTrial":
        fields = dict(t=self.t, accel=self.accel, gyro=self.gyro,
                      sample_rate_hz=self.sample_rate_hz, subject_id=self.subject_id,
                      gait_type=self.gait_type, foot=self.foot,
                      trial_index=self.trial_index)
        fields.update(changes)
        return ImuTrial(**fields)

    @classmethod
    def from_arrays(cls, accel, gyro, sample_rate_hz, **meta) -> "ImuTrial":
        n = np.asarray(accel).shape[0]
        return cls(np.arange(n) / sample_rate_hz, accel, gyro, sample_rate_hz, **meta)


@dataclass(frozen=True)
class StrideAnnotation:
    """Ground truth for one stride, heel strike to the next heel strike."""

    foot: Foot
    hs_index: int
    to_index: int
    next_hs_index: int
    stride_length_m: float
    stance_time_s: float
    swing_time_s: float
    stride_time_s: float

    def __post_init__(self):
        object.__setattr__(self, "foot", Foot(self.foot))
        if not self.hs_index < self.to_index < self.next_hs_index:
            raise ValueError(
                f"need hs < to < next_hs, got {self.hs_index}, {self.to_index}, "
                f"{self.next_hs_index}")
        if abs(self.stance_time_s + self.swing_time_s - self.stride_time_s) > 1e-9:
            raise ValueError("stride_time_s must equal stance_time_s + swing_time_s")
        if not self.stride_length_m >= 0:
            raise ValueError("stride_length_m must be non-negative")

    @classmethod
    def from_indices(cls, foot, hs, to, next_hs, stride_length_m, sample_rate_hz):
        stance = (to - hs) / sample_rate_hz
        swing = (next_hs - to) / sample_rate_hz
        return cls(Foot(foot), int(hs), int(to), int(next_hs), float(stride_length_m),
                   stance, swing, stance + swing)

    def shifted(self, n: int) -> "StrideAnnotation":
        return StrideAnnotation(self.foot, self.hs_index + n, self.to_index + n,
                                self.next_hs_index + n, self.stride_length_m,
                                self.stance_time_s, self.swing_time_s, self.stride_time_s)


@dataclass(frozen=True)
class GaitParameters:
    cadence_steps_per_min: float
    mean_stride_length_m: float
    stride_length_std_m: float
    mean_stance_time_s: float
    mean_swing_time_s: float
    swing_stance_ratio: float
    # None when the two feet never overlap in time
    double_support_time_s: Optional[float]
    symmetry_index: float
    per_foot_swing_stance_ratio: dict = field(default_factory=dict)
