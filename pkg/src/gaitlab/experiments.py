"""End-to-end experiments: CNN training, ZUPT comparison, transfer learning, evaluation."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import reports, synth, windows as win, zupt
from .config import ExperimentConfig
from .nn import Model, build_model, fine_tune, load_model, save_model, train
from .nn.train import EpochRecord, TrainConfig
from .reports import StridePrediction

log = logging.getLogger(__name__)


def build_dataset(cfg: ExperimentConfig, profile_fn=synth.sample_profile, master_seed: int | None = None,
                  n_subjects: int | None = None, trials_per_pattern: int | None = None) -> synth.Dataset:
    d = cfg.dataset
    return synth.generate_dataset(
        n_subjects or d.n_subjects, trials_per_pattern or d.trials_per_pattern, d.noise_config(),
        cfg.seed if master_seed is None else master_seed, sample_rate_hz=d.sample_rate_hz,
        strides=d.strides(), profile_fn=profile_fn)


def dataset_windows(dataset: synth.Dataset, skipped: list | None = None) -> list[win.StrideWindow]:
    out = []
    for trial, anns in dataset.trials:
        out.extend(win.segment_ground_truth(trial, anns, skipped=skipped))
    return out


def split_windows(windows: Sequence[win.StrideWindow], held_out) -> tuple[list, list]:
    held = set(held_out)
    train_w = [w for w in windows if w.meta.subject_id not in held]
    test_w = [w for w in windows if w.meta.subject_id in held]
    return train_w, test_w


@dataclass
class TrainedModel:
    model: Model
    norm: win.NormStats
    history: list

    def predict(self, windows: Sequence[win.StrideWindow]) -> np.ndarray:
        x, _ = win.stack([win.apply_norm(w, self.norm) for w in windows])
        return self.model.predict(x)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_model(self.model, directory / "model.bin")
        (directory / "norm.json").write_text(json.dumps(
            {"mean": [repr(float(v)) for v in self.norm.mean],
             "std": [repr(float(v)) for v in self.norm.std]}, indent=1) + "\n")

    @classmethod
    def load(cls, directory) -> "TrainedModel":
        directory = Path(directory)
        norm = json.loads((directory / "norm.json").read_text())
        stats = win.NormStats(np.array([float(v) for v in norm["mean"]]),
                              np.array([float(v) for v in norm["std"]]))
        return cls(load_model(directory / "model.bin"), stats, [])


def train_cnn(cfg: ExperimentConfig, train_windows: Sequence[win.StrideWindow],
              val_windows: Sequence[win.StrideWindow] = ()) -> TrainedModel:
    """Fit normalisation on the training windows only, then train from scratch."""
    if not train_windows:
        raise ValueError("no training windows")
    norm = win.fit_norm_stats(train_windows)
    x, y = win.stack([win.apply_norm(w, norm) for w in train_windows])
    xv, yv = win.stack([win.apply_norm(w, norm) for w in val_windows]) if val_windows else (None, None)
    model = build_model(seed=cfg.seed, output_init=float(np.mean(y)))
    model, history = train(model, x, y, xv, yv, replace(cfg.train, seed=cfg.seed))
    return TrainedModel(model, norm, history)


def prediction_records(windows: Sequence[win.StrideWindow], preds) -> list[StridePrediction]:
    return [StridePrediction(w.meta.subject_id, w.meta.gait_type.value, w.meta.foot.value,
                             w.meta.trial_index, w.meta.stride_index, w.label_m, float(p))
            for w, p in zip(windows, preds)]


def zupt_by_stride(dataset: synth.Dataset, subjects, cfg: zupt.ZuptConfig) -> dict[tuple, float]:
    """ZUPT estimate per annotated stride, keyed like ``WindowMeta.key()``."""
    out = {}
    for trial, anns in dataset.select(subjects=set(subjects)):
        est = zupt.zupt_estimates(trial, anns, cfg)
        for i, value in enumerate(est):
            out[(trial.subject_id, trial.gait_type.value, trial.foot.value, trial.trial_index, i)] = float(value)
    return out


@dataclass
class CompareResult:
    report: reports.ComparisonReport
    keys: list
    labels: np.ndarray
    ml: np.ndarray
    zupt: np.ndarray
    trained: TrainedModel

    def raw_csv(self) -> str:
        return reports.comparison_raw_csv(self.keys, self.labels, self.ml, self.zupt)


def run_compare(cfg: ExperimentConfig, dataset: synth.Dataset | None = None,
                trained: TrainedModel | None = None) -> CompareResult:
    """Leave-subjects-out CNN versus ZUPT on the same held-out strides."""
    dataset = dataset or build_dataset(cfg)
    windows = dataset_windows(dataset)
    train_w, test_w = split_windows(windows, cfg.held_out)
    if trained is None:
        trained = train_cnn(cfg, train_w)
    ml = trained.predict(test_w)
    z = zupt_by_stride(dataset, cfg.held_out, cfg.zupt)
    keys = [w.meta.key() for w in test_w]
    labels = np.array([w.label_m for w in test_w])
    zv = np.array([z[k] for k in keys])
    report = reports.build_comparison([k[1] for k in keys], labels, ml, zv)
    return CompareResult(report, keys, labels, ml, zv, trained)


@dataclass
class TransferResult:
    seed: int
    frozen: reports.TransferStats
    tuned: reports.TransferStats
    features_unchanged: bool
    history: list

    def stats(self) -> list:
        return [self.frozen, self.tuned]


def shifted_windows(cfg: ExperimentConfig, seed: int) -> list[win.StrideWindow]:
    t = cfg.transfer
    ds = build_dataset(cfg, profile_fn=synth.shifted_profile,
                       master_seed=synth.seed_for(cfg.seed, 77, seed),
                       n_subjects=t.n_subjects, trials_per_pattern=t.trials_per_pattern)
    return dataset_windows(ds)


def run_transfer(cfg: ExperimentConfig, pretrained: TrainedModel, seed: int) -> TransferResult:
    """Fine-tune the FC layer on a few shifted-cohort strides and compare on the rest.

    Support and evaluation strides are disjoint draws from one shifted cohort.
    """
    t = cfg.transfer
    if t.support_windows < 1:
        raise ValueError("transfer.support_windows must be >= 1")
    windows = shifted_windows(cfg, seed)
    order = np.random.default_rng([int(cfg.seed), int(seed), 55]).permutation(len(windows))
    support = [windows[i] for i in order[:t.support_windows]]
    evaluation = [windows[i] for i in order[t.support_windows:t.support_windows + t.eval_windows]]
    if not evaluation:
        raise ValueError("shifted cohort too small for an evaluation set")

    x, y = win.stack([win.apply_norm(w, pretrained.norm) for w in support])
    tcfg = TrainConfig(learning_rate=t.learning_rate, batch_size=t.batch_size, epochs=t.epochs,
                       seed=synth.seed_for(cfg.seed, 88, seed), optimizer="adam")
    tuned_model, history = fine_tune(pretrained.model, x, y, tcfg)
    tuned = TrainedModel(tuned_model, pretrained.norm, history)

    truth = np.array([w.label_m for w in evaluation])
    frozen_stats = reports.transfer_stats("frozen", pretrained.predict(evaluation), truth)
    tuned_stats = reports.transfer_stats("fine_tuned", tuned.predict(evaluation), truth)
    unchanged = all(np.array_equal(pretrained.model.params[n], tuned_model.params[n])
                    for n in pretrained.model.params if not n.startswith("fc."))
    unchanged &= all(np.array_equal(pretrained.model.buffers[n], tuned_model.buffers[n])
                     for n in pretrained.model.buffers)
    return TransferResult(seed, frozen_stats, tuned_stats, unchanged, history)


def transfer_report_csv(results: Sequence[TransferResult]) -> str:
    lines = []
    for i, r in enumerate(results):
        text = reports.transfer_csv(r.stats())
        body = text.splitlines()
        if i == 0:
            lines.append("seed," + body[0])
        lines += [f"{r.seed},{row}" for row in body[1:]]
    return "\n".join(lines) + "\n"


def held_out_records(cfg: ExperimentConfig, trained: TrainedModel,
                     dataset: synth.Dataset | None = None, subjects=None) -> list[StridePrediction]:
    dataset = dataset or build_dataset(cfg)
    subjects = set(cfg.held_out if subjects is None else subjects)
    windows = [w for w in dataset_windows(dataset) if w.meta.subject_id in subjects]
    return prediction_records(windows, trained.predict(windows))


def write_eval_outputs(out_dir, records: Sequence[StridePrediction], discard: bool) -> dict[str, str]:
    """Write the raw predictions and every report derived from them; returns name -> text."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    texts = {"predictions.csv": reports.predictions_csv(records)}
    texts.update(derived_reports(records, discard))
    for name, text in texts.items():
        reports.write_text(out_dir / name, text)
    return texts


def derived_reports(records: Sequence[StridePrediction], discard: bool) -> dict[str, str]:
    used = reports.discard_boundary_records(records) if discard else list(records)
    report = reports.build_eval_report(used)
    texts = {
        "eval.csv": reports.eval_csv(report),
        "subjects.csv": reports.subject_table_csv(reports.build_eval_report(records)),
        "boundary.csv": reports.boundary_table_csv(records),
        "variance.csv": reports.variance_csv(used),
        "boxplot.csv": reports.boxplot_csv(used),
        "pairs.csv": reports.pairs_csv(used),
    }
    if discard:
        texts["subjects_discarded.csv"] = reports.subject_table_csv(report)
    return texts


def history_records(history) -> list[EpochRecord]:
    return list(history)
