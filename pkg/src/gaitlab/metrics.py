"""Error metrics, stride statistics and spatio-temporal gait parameters.

All spreads use the population (1/N) estimator.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .types import GaitParameters, StrideAnnotation


def _pair(predictions, truths):
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(truths, dtype=np.float64).ravel()
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise ValueError("empty input")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise ValueError("non-finite values")
    return p, t


def rmse(predictions, truths) -> float:
    p, t = _pair(predictions, truths)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def mae_mse(predictions, truths) -> tuple[float, float]:
    p, t = _pair(predictions, truths)
    err = p - t
    return float(np.mean(np.abs(err))), float(np.mean(err ** 2))


def mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("empty input")
    return float(v.mean()), float(v.std())


def quartiles(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=np.float64).ravel()
    q1, q2, q3 = np.percentile(v, [25, 50, 75], method="linear")
    return float(q1), float(q2), float(q3)


def tukey_fences(values) -> tuple[float, float]:
    q1, _, q3 = quartiles(values)
    iqr = q3 - q1
    return q1 - 1.5 * iqr, q3 + 1.5 * iqr


def tukey_outliers(values) -> list[int]:
    """Indices of values outside the 1.5 IQR fences, in input order."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 4:
        raise ValueError("need at least 4 values for quartile fences")
    lo, hi = tukey_fences(v)
    return [int(i) for i in np.flatnonzero((v < lo) | (v > hi))]


def stride_variance(stride_lengths) -> float:
    v = np.asarray(stride_lengths, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValueError("need at least 2 strides")
    return float(v.var())


def _stance_overlap(a: StrideAnnotation, others: Sequence[StrideAnnotation],
                    start: int, stop: int) -> int:
    total = 0
    for o in others:
        lo = max(a.hs_index, o.hs_index, start)
        hi = min(a.to_index, o.to_index, stop)
        total += max(0, hi - lo)
    return total


def _double_support(left, right, rate) -> float | None:
    lo = max(left[0].hs_index, right[0].hs_index)
    hi = min(left[-1].next_hs_index, right[-1].next_hs_index)
    if hi <= lo:
        return None
    cycles = [a for a in left if a.hs_index >= lo and a.next_hs_index <= hi]
    if not cycles:
        return None
    per_cycle = []
    for c in cycles:
        overlap = _stance_overlap(c, right, c.hs_index, c.next_hs_index)
        per_cycle.append(overlap / rate)
    return float(np.mean(per_cycle))


def gait_parameters(left: Sequence[StrideAnnotation], right: Sequence[StrideAnnotation],
                    sample_rate_hz: float) -> GaitParameters:
    """Summarise a bilateral walk from per-foot stride annotations.

    Double support is the mean time per left gait cycle during which both
    feet are in stance. The symmetry index compares the per-foot
    swing-to-stance ratios, ``|L - R| / (0.5 (L + R))``.
    """
    if not left or not right:
        raise ValueError("both feet need at least one annotated stride")
    left = sorted(left, key=lambda a: a.hs_index)
    right = sorted(right, key=lambda a: a.hs_index)
    both = left + right

    events = sorted({a.hs_index for a in left} | {left[-1].next_hs_index}) + \
        sorted({a.hs_index for a in right} | {right[-1].next_hs_index})
    events.sort()
    elapsed = (events[-1] - events[0]) / sample_rate_hz
    cadence = 60.0 * (len(events) - 1) / elapsed if elapsed > 0 else 0.0

    lengths = [a.stride_length_m for a in both]
    mean_len, std_len = mean_std(lengths)
    stance = float(np.mean([a.stance_time_s for a in both]))
    swing = float(np.mean([a.swing_time_s for a in both]))

    def ratio(anns):
        return float(np.mean([a.swing_time_s for a in anns]) /
                     np.mean([a.stance_time_s for a in anns]))

    r_left, r_right = ratio(left), ratio(right)
    denom = 0.5 * (r_left + r_right)
    symmetry = abs(r_left - r_right) / denom if denom > 0 else 0.0

    return GaitParameters(
        cadence_steps_per_min=cadence,
        mean_stride_length_m=mean_len,
        stride_length_std_m=std_len,
        mean_stance_time_s=stance,
        mean_swing_time_s=swing,
        swing_stance_ratio=swing / stance,
        double_support_time_s=_double_support(left, right, sample_rate_hz),
        symmetry_index=symmetry,
        per_foot_swing_stance_ratio={"Left": r_left, "Right": r_right},
    )
