"""Foot-mounted inertial navigation with zero-velocity updates.

The pipeline is stance detection, attitude tracking, gravity removal and
ZUPT-corrected double integration, followed by stance-to-stance stride
segmentation. It is the classical baseline the learned estimator is compared
against.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import quat
from .types import GRAVITY, ImuTrial, StrideAnnotation


@dataclass(frozen=True)
class ZuptConfig:
    """Stance detector settings.

    ``sigma_a``/``sigma_g`` are the noise levels assumed by the detector
    statistic and ``gamma`` its threshold. Run lengths are in samples.
    """

    window_len: int = 5
    gamma: float = 20.0
    sigma_a: float = 0.3
    sigma_g: float = 0.03
    min_stance_samples: int = 20
    min_swing_samples: int = 20
    tilt_gain: float = 0.05

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not (self.sigma_a > 0 and self.sigma_g > 0):
            raise ValueError("detector noise levels must be positive")

    @classmethod
    def ideal(cls, **overrides) -> "ZuptConfig":
        """Detector for noise-free data: any real motion counts as swing."""
        base = cls(window_len=3, gamma=1.0, sigma_a=0.01, sigma_g=0.001)
        return replace(base, **overrides)


@dataclass(frozen=True, eq=False)
class NavSolution:
    quaternions: np.ndarray
    world_accel: np.ndarray
    velocity: np.ndarray
    position: np.ndarray
    stationary_mask: np.ndarray


def detector_statistic(trial: ImuTrial, cfg: ZuptConfig) -> np.ndarray:
    """SHOE test statistic per sample, from the window centred on it."""
    n, w = len(trial), cfg.window_len
    if n < w:
        raise ValueError(f"trial has {n} samples, fewer than window_len={w}")
    acc = sliding_window_view(trial.accel, w, axis=0)   # (n-w+1, 3, w)
    gyr = sliding_window_view(trial.gyro, w, axis=0)
    mean_a = acc.mean(axis=2)
    g_dir = mean_a / np.linalg.norm(mean_a, axis=1, keepdims=True)
    dev = acc - GRAVITY * g_dir[:, :, None]
    t = (np.sum(dev ** 2, axis=(1, 2)) / cfg.sigma_a ** 2
         + np.sum(gyr ** 2, axis=(1, 2)) / cfg.sigma_g ** 2) / w
    # window k covers samples k..k+w-1; attribute it to its centre sample
    half = (w - 1) // 2
    out = np.empty(n)
    out[half:half + t.size] = t
    out[:half] = t[0]
    out[half + t.size:] = t[-1]
    return out


def runs(mask: np.ndarray, value: bool = True) -> list[tuple[int, int]]:
    """Half-open ``[start, stop)`` runs where ``mask == value``."""
    m = np.asarray(mask, dtype=bool) == value
    if m.size == 0:
        return []
    edges = np.flatnonzero(np.diff(m.astype(np.int8))) + 1
    bounds = np.concatenate([[0], edges, [m.size]])
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if m[a]]


def clean_mask(mask: np.ndarray, min_stance: int, min_swing: int) -> np.ndarray:
    out = np.asarray(mask, dtype=bool).copy()
    for a, b in runs(out, False):
        # interior swing blips shorter than a plausible swing are noise
        if a > 0 and b < out.size and b - a < min_swing:
            out[a:b] = True
    for a, b in runs(out, True):
        if b - a < min_stance:
            out[a:b] = False
    return out


def detect_stationary(trial: ImuTrial, cfg: ZuptConfig = ZuptConfig()) -> np.ndarray:
    raw = detector_statistic(trial, cfg) < cfg.gamma
    return clean_mask(raw, cfg.min_stance_samples, cfg.min_swing_samples)


def estimate_orientation(trial: ImuTrial, mask: np.ndarray,
                         tilt_gain: float = ZuptConfig.tilt_gain) -> np.ndarray:
    """Gyro strapdown attitude with tilt correction on stationary samples.

    Initial roll and pitch come from the mean accelerometer reading over the
    leading stationary run; yaw starts at zero.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.size != len(trial):
        raise ValueError("mask length differs from trial length")
    if mask.size == 0 or not mask[0]:
        raise ValueError("attitude initialisation needs a stationary segment at trial start")
    first = runs(mask)[0]
    q = quat.from_tilt(trial.accel[first[0]:first[1]].mean(axis=0))

    n = len(trial)
    dt = 1.0 / trial.sample_rate_hz
    steps = quat.from_rotvec_many(0.5 * (trial.gyro[1:] + trial.gyro[:-1]) * dt).tolist()
    accel = trial.accel.tolist()
    still = mask.tolist()
    out = np.empty((n, 4))
    out[0] = q
    w, x, y, z = (float(c) for c in q)
    for k in range(1, n):
        # q <- q * dq, written out in scalars: this loop dominates run time
        a0, a1, a2, a3 = steps[k - 1]
        w, x, y, z = (w * a0 - x * a1 - y * a2 - z * a3,
                      w * a1 + x * a0 + y * a3 - z * a2,
                      w * a2 - x * a3 + y * a0 + z * a1,
                      w * a3 + x * a2 - y * a1 + z * a0)
        if still[k] and tilt_gain > 0:
            ax, ay, az = accel[k]
            # world-frame z component direction of the measured specific force
            vx = (1 - 2 * (y * y + z * z)) * ax + 2 * (x * y - w * z) * ay + 2 * (x * z + w * y) * az
            vy = 2 * (x * y + w * z) * ax + (1 - 2 * (x * x + z * z)) * ay + 2 * (y * z - w * x) * az
            vz = 2 * (x * z - w * y) * ax + 2 * (y * z + w * x) * ay + (1 - 2 * (x * x + y * y)) * az
            # rotation axis v x up = (vy, -vx, 0)
            s = math.hypot(vx, vy)
            if s > 1e-15 * math.sqrt(vx * vx + vy * vy + vz * vz):
                half = 0.5 * tilt_gain * math.atan2(s, vz)
                c, sn = math.cos(half), math.sin(half) / s
                e1, e2 = vy * sn, -vx * sn
                # q <- dq_world * q with dq = (c, e1, e2, 0)
                w, x, y, z = (c * w - e1 * x - e2 * y,
                              c * x + e1 * w + e2 * z,
                              c * y - e1 * z + e2 * w,
                              c * z + e1 * y - e2 * x)
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        w, x, y, z = w / norm, x / norm, y / norm, z / norm
        out[k] = (w, x, y, z)
    return out


def dead_reckon(trial: ImuTrial, quats: np.ndarray, mask: np.ndarray) -> NavSolution:
    """Double integration with velocity reset and linear de-drift per swing."""
    quats = np.asarray(quats, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    n = len(trial)
    if quats.shape != (n, 4) or mask.shape != (n,):
        raise ValueError("quaternions and mask must align with the trial")
    dt = 1.0 / trial.sample_rate_hz
    rot = quat.to_matrix(quats)
    world = np.einsum("nij,nj->ni", rot, trial.accel)
    world[:, 2] -= GRAVITY

    dv = np.zeros((n, 3))
    dv[1:] = 0.5 * (world[1:] + world[:-1]) * dt
    vel = np.zeros((n, 3))
    # each moving run starts from rest at the previous stationary sample (or t=0)
    for a, b in runs(mask, False):
        start = a - 1 if a > 0 else 0
        seg = np.cumsum(dv[start + 1:b + 1 if b < n else n], axis=0)
        if b < n:
            # seg[-1] is the velocity predicted at the first stationary sample;
            # the truth is zero, so remove that error linearly over the swing
            span = b - start
            ramp = np.arange(1, span + 1)[:, None] / span
            seg = seg - ramp * seg[-1]
            vel[start + 1:b + 1] = seg
            vel[b] = 0.0
        else:
            vel[start + 1:n] = seg
    vel[mask] = 0.0

    pos = np.zeros((n, 3))
    pos[1:] = np.cumsum(0.5 * (vel[1:] + vel[:-1]) * dt, axis=0)
    return NavSolution(quats, world, vel, pos, mask)


def navigate(trial: ImuTrial, cfg: ZuptConfig = ZuptConfig(),
             mask: np.ndarray | None = None) -> NavSolution:
    if mask is None:
        mask = detect_stationary(trial, cfg)
    q = estimate_orientation(trial, mask, cfg.tilt_gain)
    return dead_reckon(trial, q, mask)


def zupt_segment(mask: np.ndarray) -> list[tuple[int, int]]:
    """Stride intervals ``[stance_k start, stance_{k+1} start)``."""
    starts = [a for a, _ in runs(mask, True)]
    return list(zip(starts[:-1], starts[1:]))


def zupt_stride_lengths(nav: NavSolution, intervals: Sequence[tuple[int, int]]) -> list[float]:
    n = nav.position.shape[0]
    out = []
    for a, b in intervals:
        if not 0 <= a < b <= n:
            raise ValueError(f"interval ({a}, {b}) outside trial of {n} samples")
        # b is the first sample of the next stance: the foot is already at rest
        d = nav.position[min(b, n - 1), :2] - nav.position[a, :2]
        out.append(float(np.hypot(*d)))
    return out


def match_to_annotations(intervals: Sequence[tuple[int, int]], lengths: Sequence[float],
                         annotations: Sequence[StrideAnnotation]) -> np.ndarray:
    """ZUPT estimate for each annotated stride.

    Each annotated stride takes the length of the detected stride that
    overlaps it most; strides with no overlapping detection get 0. Merged
    (missed) and split (overcounted) detections therefore show up as errors.
    """
    out = np.zeros(len(annotations))
    for i, ann in enumerate(annotations):
        best, best_overlap = 0.0, 0
        for (a, b), length in zip(intervals, lengths):
            overlap = min(b, ann.next_hs_index) - max(a, ann.hs_index)
            if overlap > best_overlap:
                best, best_overlap = length, overlap
        out[i] = best
    return out


def zupt_estimates(trial: ImuTrial, annotations: Sequence[StrideAnnotation],
                   cfg: ZuptConfig = ZuptConfig()) -> np.ndarray:
    nav = navigate(trial, cfg)
    intervals = zupt_segment(nav.stationary_mask)
    lengths = zupt_stride_lengths(nav, intervals)
    return match_to_annotations(intervals, lengths, annotations)


def mask_agreement(mask: np.ndarray, annotations: Sequence[StrideAnnotation],
                   n: int) -> float:
    """Fraction of samples where ``mask`` matches the annotated stance/swing label."""
    truth = annotated_stance(annotations, n)
    return float(np.mean(np.asarray(mask, dtype=bool) == truth))


def annotated_stance(annotations: Sequence[StrideAnnotation], n: int) -> np.ndarray:
    truth = np.ones(n, dtype=bool)
    for ann in annotations:
        truth[ann.to_index + 1:ann.next_hs_index] = False
    return truth


def calibrate_gamma(trials: Sequence[ImuTrial], annotations: Sequence[Sequence[StrideAnnotation]],
                    cfg: ZuptConfig, candidates: Sequence[float]) -> float:
    """Threshold maximising mean stance/swing agreement on calibration trials."""
    stats = [detector_statistic(t, cfg) for t in trials]
    truths = [annotated_stance(a, len(t)) for t, a in zip(trials, annotations)]
    best, best_score = None, -1.0
    for gamma in candidates:
        score = np.mean([
            np.mean(clean_mask(s < gamma, cfg.min_stance_samples, cfg.min_swing_samples) == tr)
            for s, tr in zip(stats, truths)])
        if score > best_score:
            best, best_score = float(gamma), score
    return best


def write_debug_csv(path, trial: ImuTrial, nav: NavSolution) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "stationary", "vx", "vy", "vz", "px", "py", "pz"])
        for k in range(len(trial)):
            w.writerow([repr(float(trial.t[k])), int(nav.stationary_mask[k]),
                        *(repr(float(x)) for x in nav.velocity[k]),
                        *(repr(float(x)) for x in nav.position[k])])
