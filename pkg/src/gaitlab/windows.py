"""Fixed-length stride windows, the CNN input unit.

Each stride is copied left-aligned from heel strike into an 800 x 6 block
and right-padded with its own last sample, which lies in the following
stance, so the pad looks like a resting foot.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .types import Foot, GaitType, ImuTrial, StrideAnnotation

log = logging.getLogger(__name__)

WINDOW_LEN = 800
N_CHANNELS = 6
STD_FLOOR = 1e-8


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class WindowMeta:
    subject_id: int
    gait_type: GaitType
    foot: Foot
    trial_index: int
    stride_index: int

    def key(self) -> tuple:
        return (self.subject_id, self.gait_type.value, self.foot.value,
                self.trial_index, self.stride_index)


@dataclass(frozen=True, eq=False)
class StrideWindow:
    data: np.ndarray
    label_m: float
    meta: WindowMeta
    n_valid: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != N_CHANNELS:
            raise ValueError(f"window must be (T, {N_CHANNELS}), got {data.shape}")
        if not 1 <= self.n_valid <= data.shape[0]:
            raise ValueError("n_valid out of range")
        if not self.label_m >= 0:
            raise ValueError("label must be non-negative")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def pad_value(self) -> np.ndarray:
        return self.data[self.n_valid - 1]


def extract_window(trial: ImuTrial, interval: tuple[int, int], label_m: float = 0.0,
                   meta: WindowMeta | None = None,
                   window_len: int = WINDOW_LEN) -> StrideWindow:
    """Window for samples ``[start, stop)``; the pad repeats sample ``stop - 1``."""
    start, stop = int(interval[0]), int(interval[1])
    if not 0 <= start < stop <= len(trial):
        raise SegmentationError(f"interval ({start}, {stop}) outside trial of {len(trial)} samples")
    n = stop - start
    if n > window_len:
        raise SegmentationError(f"stride of {n} samples exceeds window of {window_len}")
    if meta is None:
        meta = WindowMeta(trial.subject_id, trial.gait_type, trial.foot, trial.trial_index, 0)
    src = trial.data[start:stop]
    data = np.empty((window_len, N_CHANNELS))
    data[:n] = src
    data[n:] = src[-1]
    return StrideWindow(data, float(label_m), meta, n)


def stride_interval(ann: StrideAnnotation) -> tuple[int, int]:
    # include the next heel strike sample so the window ends at rest
    return ann.hs_index, ann.next_hs_index + 1


def segment_ground_truth(trial: ImuTrial, annotations: Sequence[StrideAnnotation],
                         window_len: int = WINDOW_LEN, skipped: list | None = None) -> list[StrideWindow]:
    """One labelled window per annotated stride.

    Strides longer than the window are skipped with a warning; pass a list
    as ``skipped`` to collect their metadata.
    """
    out = []
    for i, ann in enumerate(annotations):
        meta = WindowMeta(trial.subject_id, trial.gait_type, trial.foot, trial.trial_index, i)
        try:
            out.append(extract_window(trial, stride_interval(ann), ann.stride_length_m, meta,
                                      window_len))
        except SegmentationError as exc:
            log.warning("skipping stride %s: %s", meta.key(), exc)
            if skipped is not None:
                skipped.append(meta)
    return out


def group_by_trial(windows: Iterable[StrideWindow]) -> dict[tuple, list[StrideWindow]]:
    groups: dict[tuple, list[StrideWindow]] = {}
    for w in windows:
        m = w.meta
        groups.setdefault((m.subject_id, m.gait_type.value, m.foot.value, m.trial_index), []).append(w)
    return groups


def discard_boundary(groups: Iterable[Sequence[StrideWindow]]) -> list[StrideWindow]:
    """Drop the first and last stride of every trial, keeping order."""
    out = []
    for strides in groups:
        out.extend(list(strides)[1:-1])
    return out


@dataclass(frozen=True, eq=False)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(N_CHANNELS)
        std = np.maximum(np.asarray(self.std, dtype=np.float64).reshape(N_CHANNELS), STD_FLOOR)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def identity(cls) -> "NormStats":
        return cls(np.zeros(N_CHANNELS), np.ones(N_CHANNELS))


def fit_norm_stats(windows: Sequence[StrideWindow]) -> NormStats:
    """Channel mean and population std over the unpadded samples."""
    if not windows:
        raise ValueError("cannot fit normalisation on an empty set")
    real = np.concatenate([w.data[:w.n_valid] for w in windows])
    return NormStats(real.mean(axis=0), real.std(axis=0))


def apply_norm(window: StrideWindow, stats: NormStats) -> StrideWindow:
    data = (window.data - stats.mean) / stats.std
    return StrideWindow(data, window.label_m, window.meta, window.n_valid)


def stack(windows: Sequence[StrideWindow]) -> tuple[np.ndarray, np.ndarray]:
    """Batch array ``(B, T, 6)`` and label vector ``(B,)``."""
    x = np.stack([w.data for w in windows]) if windows else np.empty((0, WINDOW_LEN, N_CHANNELS))
    y = np.array([w.label_m for w in windows], dtype=np.float64)
    return x, y
