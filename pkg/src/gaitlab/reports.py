"""Evaluation reports and the CSV files behind every table and plot.

Everything here is derived from per-stride prediction records, which are
always persisted, so any report can be rebuilt from the raw file alone.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import metrics
from .types import GaitType

GAITS = [g.value for g in GaitType]
PATHOLOGICAL = (GaitType.SHUFFLE.value, GaitType.STROKE.value)


@dataclass(frozen=True)
class StridePrediction:
    subject_id: int
    gait_type: str
    foot: str
    trial_index: int
    stride_index: int
    label_m: float
    pred_m: float

    @property
    def trial_key(self) -> tuple:
        return (self.subject_id, self.gait_type, self.foot, self.trial_index)


RAW_FIELDS = ("subject_id", "gait_type", "foot", "trial_index", "stride_index", "label_m", "pred_m")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    Path(path).write_bytes(text.encode("utf-8"))


def predictions_csv(records: Sequence[StridePrediction]) -> str:
    return _csv_text(RAW_FIELDS, ([getattr(r, f) for f in RAW_FIELDS] for r in records))


def read_predictions(path) -> list[StridePrediction]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RAW_FIELDS:
            raise ValueError(f"{path}: expected columns {','.join(RAW_FIELDS)}")
        return [StridePrediction(int(r["subject_id"]), r["gait_type"], r["foot"],
                                 int(r["trial_index"]), int(r["stride_index"]),
                                 float(r["label_m"]), float(r["pred_m"])) for r in reader]


def by_trial(records: Sequence[StridePrediction]) -> dict[tuple, list[StridePrediction]]:
    groups: dict[tuple, list[StridePrediction]] = {}
    for r in records:
        groups.setdefault(r.trial_key, []).append(r)
    for g in groups.values():
        g.sort(key=lambda r: r.stride_index)
    return groups


def discard_boundary_records(records: Sequence[StridePrediction]) -> list[StridePrediction]:
    """First and last stride of every trial removed; survivors keep their order."""
    keep = set()
    for strides in by_trial(records).values():
        keep.update((r.trial_key, r.stride_index) for r in strides[1:-1])
    return [r for r in records if (r.trial_key, r.stride_index) in keep]


def mean_trial_variance(records: Sequence[StridePrediction], source: str) -> float | None:
    """Mean over trials (with >= 2 strides) of the per-trial stride variance."""
    values = []
    for strides in by_trial(records).values():
        if len(strides) >= 2:
            values.append(metrics.stride_variance(
                [r.label_m if source == "truth" else r.pred_m for r in strides]))
    return float(np.mean(values)) if values else None


@dataclass(frozen=True)
class EvalRow:
    gait_type: str
    subject: str
    n: int
    rmse_m: float
    mae_m: float
    mean_m: float
    std_m: float
    true_mean_m: float
    true_std_m: float
    stride_variance_m2: float | None
    outlier_indices: tuple = ()


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def row(self, gait_type: str, subject: str) -> EvalRow:
        for r in self.rows:
            if r.gait_type == gait_type and r.subject == subject:
                return r
        raise KeyError((gait_type, subject))


def _eval_row(gait: str, subject: str, recs: Sequence[StridePrediction]) -> EvalRow:
    pred = [r.pred_m for r in recs]
    true = [r.label_m for r in recs]
    mae, mse = metrics.mae_mse(pred, true)
    mean, std = metrics.mean_std(pred)
    tmean, tstd = metrics.mean_std(true)
    outliers = tuple(metrics.tukey_outliers(pred)) if len(pred) >= 4 else ()
    return EvalRow(gait, subject, len(recs), float(np.sqrt(mse)), mae, mean, std, tmean, tstd,
                   mean_trial_variance(recs, "prediction"), outliers)


def build_eval_report(records: Sequence[StridePrediction]) -> EvalReport:
    """Rows per (gait, subject), an ``AVG`` row per gait and an ``ALL`` row.

    Aggregate rows pool the raw stride pairs.
    """
    report = EvalReport()
    for gait in GAITS:
        recs = [r for r in records if r.gait_type == gait]
        for subject in sorted({r.subject_id for r in recs}):
            report.rows.append(_eval_row(gait, str(subject), [r for r in recs if r.subject_id == subject]))
        if recs:
            report.rows.append(_eval_row(gait, "AVG", recs))
    if records:
        report.rows.append(_eval_row("ALL", "ALL", records))
    return report


EVAL_FIELDS = ("gait_type", "subject", "n", "rmse_m", "mae_m", "mean_m", "std_m",
               "true_mean_m", "true_std_m", "stride_variance_m2", "outliers")


def eval_csv(report: EvalReport) -> str:
    return _csv_text(EVAL_FIELDS, ([r.gait_type, r.subject, r.n, r.rmse_m, r.mae_m, r.mean_m, r.std_m,
                                    r.true_mean_m, r.true_std_m, r.stride_variance_m2,
                                    " ".join(map(str, r.outlier_indices))] for r in report.rows))


def subject_table_csv(report: EvalReport) -> str:
    """Subjects as rows and, per gait, predicted mean, STD and RMSE as columns."""
    header = ["subject"]
    for g in GAITS:
        header += [f"{g}_mean_m", f"{g}_std_m", f"{g}_rmse_m", f"{g}_n"]
    subjects = sorted({r.subject for r in report.rows if r.subject not in ("AVG", "ALL")}, key=int)
    rows = []
    for s in subjects + ["AVG"]:
        line = [s]
        for g in GAITS:
            try:
                r = report.row(g, s)
                line += [r.mean_m, r.std_m, r.rmse_m, r.n]
            except KeyError:
                line += [None, None, None, 0]
        rows.append(line)
    return _csv_text(header, rows)


def boundary_table_csv(records: Sequence[StridePrediction]) -> str:
    """Stride counts, extremes and Tukey outlier counts, with and without boundary strides."""
    rows = []
    for policy, recs in (("all", list(records)), ("discard_boundary", discard_boundary_records(records))):
        for gait in GAITS:
            for source in ("truth", "prediction"):
                vals = [r.label_m if source == "truth" else r.pred_m for r in recs if r.gait_type == gait]
                if not vals:
                    rows.append([policy, gait, source, 0, None, None, None])
                    continue
                out = len(metrics.tukey_outliers(vals)) if len(vals) >= 4 else 0
                rows.append([policy, gait, source, len(vals), min(vals), max(vals), out])
    return _csv_text(("policy", "gait_type", "source", "total_strides", "min_m", "max_m", "outliers"), rows)


def variance_csv(records: Sequence[StridePrediction]) -> str:
    """Mean per-trial stride variance per subject and per cohort."""
    rows = []
    for gait in GAITS:
        recs = [r for r in records if r.gait_type == gait]
        for subject in sorted({r.subject_id for r in recs}):
            sub = [r for r in recs if r.subject_id == subject]
            rows.append([gait, subject, mean_trial_variance(sub, "truth"),
                         mean_trial_variance(sub, "prediction")])
        if recs:
            rows.append([gait, "cohort", mean_trial_variance(recs, "truth"),
                         mean_trial_variance(recs, "prediction")])
    return _csv_text(("gait_type", "subject", "truth_variance_m2", "prediction_variance_m2"), rows)


def boxplot_csv(records: Sequence[StridePrediction]) -> str:
    rows = []
    for gait in GAITS:
        for source in ("truth", "prediction"):
            vals = np.array([r.label_m if source == "truth" else r.pred_m
                             for r in records if r.gait_type == gait])
            if vals.size < 4:
                continue
            q1, q2, q3 = metrics.quartiles(vals)
            lo, hi = metrics.tukey_fences(vals)
            inside = vals[(vals >= lo) & (vals <= hi)]
            rows.append([gait, source, vals.size, q1, q2, q3, lo, hi,
                         float(inside.min()), float(inside.max()),
                         len(metrics.tukey_outliers(vals))])
    return _csv_text(("gait_type", "source", "n", "q1_m", "median_m", "q3_m", "lower_fence_m",
                      "upper_fence_m", "whisker_low_m", "whisker_high_m", "outliers"), rows)


def pairs_csv(records: Sequence[StridePrediction]) -> str:
    return _csv_text(("gait_type", "label_m", "pred_m"), ([r.gait_type, r.label_m, r.pred_m] for r in records))


# -- ZUPT versus CNN ---------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    group: str
    n: int
    ml_rmse_m: float
    zupt_rmse_m: float
    mean_stride_m: float

    @property
    def improvement_pct(self) -> float | None:
        if self.zupt_rmse_m > 0:
            return 100.0 * (1.0 - self.ml_rmse_m / self.zupt_rmse_m)
        return None


@dataclass
class ComparisonReport:
    rows: list

    def row(self, group: str) -> ComparisonRow:
        for r in self.rows:
            if r.group == group:
                return r
        raise KeyError(group)


def _comparison_row(group, labels, ml, zupt) -> ComparisonRow:
    return ComparisonRow(group, len(labels), metrics.rmse(ml, labels), metrics.rmse(zupt, labels),
                         float(np.mean(labels)))


def build_comparison(gaits: Sequence[str], labels, ml, zupt) -> ComparisonReport:
    """Per-gait rows, a ``Pathological`` (Shuffle + Stroke) row and an ``Overall`` row."""
    gaits = np.asarray(gaits)
    labels, ml, zupt = (np.asarray(v, dtype=np.float64) for v in (labels, ml, zupt))
    rows = []
    for group, mask in [(g, gaits == g) for g in GAITS] + \
            [("Pathological", np.isin(gaits, PATHOLOGICAL)), ("Overall", np.ones(gaits.size, bool))]:
        if mask.any():
            rows.append(_comparison_row(group, labels[mask], ml[mask], zupt[mask]))
    return ComparisonReport(rows)


def comparison_csv(report: ComparisonReport) -> str:
    return _csv_text(("group", "n", "ml_rmse_m", "zupt_rmse_m", "mean_stride_m", "improvement_pct"),
                     ([r.group, r.n, r.ml_rmse_m, r.zupt_rmse_m, r.mean_stride_m, r.improvement_pct]
                      for r in report.rows))


def comparison_table(report: ComparisonReport) -> str:
    lines = [f"{'':<14}{'CNN':>9}{'ZUPT':>9}{'Mean':>9}{'Improv.':>10}"]
    for r in report.rows:
        imp = "n/a" if r.improvement_pct is None else f"{r.improvement_pct:.1f}%"
        lines.append(f"{r.group:<14}{r.ml_rmse_m:>9.3f}{r.zupt_rmse_m:>9.3f}{r.mean_stride_m:>9.3f}{imp:>10}")
    return "\n".join(lines) + "\n"


COMPARE_RAW_FIELDS = RAW_FIELDS[:-1] + ("ml_m", "zupt_m")


def comparison_raw_csv(keys, labels, ml, zupt) -> str:
    return _csv_text(COMPARE_RAW_FIELDS, ([*k, l, a, b] for k, l, a, b in zip(keys, labels, ml, zupt)))


def read_comparison_raw(path) -> ComparisonReport:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return build_comparison([r["gait_type"] for r in rows], [float(r["label_m"]) for r in rows],
                            [float(r["ml_m"]) for r in rows], [float(r["zupt_m"]) for r in rows])


# -- transfer learning -------------------------------------------------------

@dataclass(frozen=True)
class TransferStats:
    model: str
    n: int
    pred_mean_m: float
    gt_mean_m: float
    pred_std_m: float
    gt_std_m: float
    mae_m: float
    mse_m2: float
    rmse_m: float


def transfer_stats(name: str, pred, truth) -> TransferStats:
    pm, ps = metrics.mean_std(pred)
    gm, gs = metrics.mean_std(truth)
    mae, mse = metrics.mae_mse(pred, truth)
    return TransferStats(name, len(pred), pm, gm, ps, gs, mae, mse, float(np.sqrt(mse)))


TRANSFER_FIELDS = ("model", "n", "pred_mean_m", "gt_mean_m", "pred_std_m", "gt_std_m", "mae_m",
                   "mse_m2", "rmse_m")


def transfer_csv(stats: Sequence[TransferStats]) -> str:
    return _csv_text(TRANSFER_FIELDS, ([getattr(s, f) for f in TRANSFER_FIELDS] for s in stats))


def transfer_table(stats: Sequence[TransferStats]) -> str:
    lines = [f"{'':<12}{'Pred':>8}{'GT':>8}{'PredSTD':>9}{'GTSTD':>8}{'MAE':>8}{'MSE':>8}{'RMSE':>8}"]
    for s in stats:
        lines.append(f"{s.model:<12}{s.pred_mean_m:>8.4f}{s.gt_mean_m:>8.4f}{s.pred_std_m:>9.4f}"
                     f"{s.gt_std_m:>8.4f}{s.mae_m:>8.4f}{s.mse_m2:>8.4f}{s.rmse_m:>8.4f}")
    return "\n".join(lines) + "\n"
