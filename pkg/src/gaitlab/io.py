"""On-disk formats: trial CSV, annotation JSON, dataset manifest, window cache."""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .types import Foot, GaitType, ImuTrial, StrideAnnotation
from .windows import N_CHANNELS, StrideWindow, WindowMeta

TRIAL_HEADER = ("t", "ax", "ay", "az", "gx", "gy", "gz")


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, path, line: int | None, message: str):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


def _num(x: float) -> str:
    return repr(float(x))


def trial_stem(trial: ImuTrial) -> str:
    return f"s{trial.subject_id:02d}_{trial.gait_type.value.lower()}_{trial.foot.value.lower()}_t{trial.trial_index:02d}"


def write_trial_csv(path, trial: ImuTrial) -> None:
    lines = [",".join(TRIAL_HEADER)]
    data = trial.data
    for k in range(len(trial)):
        lines.append(",".join([_num(trial.t[k]), *map(_num, data[k])]))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_trial_csv(path, sample_rate_hz: float | None = None, **meta) -> ImuTrial:
    """Parse a trial CSV; the rate is inferred from the time column when not given."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(path, None, f"not an ASCII CSV ({exc.reason})") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(path, 1, "empty file")
    header = tuple(c.strip() for c in lines[0].rstrip("\r").split(","))
    if header != TRIAL_HEADER:
        raise ParseError(path, 1, f"expected header {','.join(TRIAL_HEADER)!r}, got {lines[0]!r}")
    rows = np.empty((len(lines) - 1, 7))
    for i, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\r").split(",")
        if len(cells) != 7:
            raise ParseError(path, i, f"expected 7 fields, got {len(cells)}")
        try:
            rows[i - 2] = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(path, i, str(exc)) from None
        if not np.all(np.isfinite(rows[i - 2])):
            raise ParseError(path, i, "non-finite value")
    if rows.shape[0] == 0:
        raise ParseError(path, 2, "no samples")
    t = rows[:, 0]
    if sample_rate_hz is None:
        if t.size < 2:
            raise ParseError(path, 2, "cannot infer the sample rate from one sample")
        spacing = float(np.median(np.diff(t)))
        if not spacing > 0:
            raise ParseError(path, 3, "time stamps do not advance")
        sample_rate_hz = float(round(1.0 / spacing, 9))
    bad = np.flatnonzero(np.abs(np.diff(t) - 1.0 / sample_rate_hz) > 1e-9)
    if bad.size:
        raise ParseError(path, int(bad[0]) + 3, "time stamps are not uniformly spaced")
    return ImuTrial(t, rows[:, 1:4], rows[:, 4:7], sample_rate_hz, **meta)


def annotation_dict(trial: ImuTrial, annotations: Sequence[StrideAnnotation]) -> dict:
    return {
        "subject_id": trial.subject_id,
        "gait_type": trial.gait_type.value,
        "foot": trial.foot.value,
        "sample_rate_hz": trial.sample_rate_hz,
        "strides": [{"hs": a.hs_index, "to": a.to_index, "next_hs": a.next_hs_index,
                     "stride_length_m": a.stride_length_m, "stance_time_s": a.stance_time_s,
                     "swing_time_s": a.swing_time_s} for a in annotations],
    }


def write_annotations(path, trial: ImuTrial, annotations: Sequence[StrideAnnotation]) -> None:
    write_json(path, annotation_dict(trial, annotations))


def read_annotations(path) -> tuple[dict, list[StrideAnnotation]]:
    path = Path(path)
    doc = read_json(path)
    try:
        foot = Foot(doc["foot"])
        out = [StrideAnnotation(foot, int(s["hs"]), int(s["to"]), int(s["next_hs"]),
                                float(s["stride_length_m"]), float(s["stance_time_s"]),
                                float(s["swing_time_s"]),
                                float(s["stance_time_s"]) + float(s["swing_time_s"]))
               for s in doc["strides"]]
        meta = {"subject_id": int(doc["subject_id"]), "gait_type": GaitType(doc["gait_type"]),
                "foot": foot}
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, None, f"invalid annotation document: {exc}") from None
    return meta | {"sample_rate_hz": float(doc["sample_rate_hz"])}, out


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None


def write_dataset(out_dir, dataset) -> dict:
    """Write one CSV and one JSON per trial plus ``manifest.json``; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = dict(dataset.manifest)
    entries = []
    for (trial, anns), entry in zip(dataset.trials, manifest["trials"]):
        stem = trial_stem(trial)
        write_trial_csv(out_dir / f"{stem}.csv", trial)
        write_annotations(out_dir / f"{stem}.json", trial, anns)
        entries.append(entry | {"csv": f"{stem}.csv", "annotations": f"{stem}.json"})
    manifest["trials"] = entries
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def read_dataset(directory) -> list[tuple[ImuTrial, list[StrideAnnotation]]]:
    directory = Path(directory)
    manifest = read_json(directory / "manifest.json")
    out = []
    for e in manifest["trials"]:
        meta, anns = read_annotations(directory / e["annotations"])
        trial = read_trial_csv(directory / e["csv"], meta.pop("sample_rate_hz"),
                               trial_index=int(e["trial_index"]), **meta)
        out.append((trial, anns))
    return out


_RECORD = struct.Struct("<d")


def write_window_cache(path, windows: Sequence[StrideWindow]) -> None:
    """Binary records ``[label][T x 6 values]`` as little-endian float64, plus a JSON sidecar."""
    path = Path(path)
    length = windows[0].data.shape[0] if windows else 0
    with path.open("wb") as fh:
        for w in windows:
            if w.data.shape != (length, N_CHANNELS):
                raise ValueError("all cached windows must share one shape")
            fh.write(_RECORD.pack(w.label_m))
            fh.write(np.ascontiguousarray(w.data, dtype="<f8").tobytes())
    write_json(path.with_suffix(path.suffix + ".json"), {
        "window_len": length, "channels": N_CHANNELS, "count": len(windows),
        "windows": [{"subject_id": w.meta.subject_id, "gait_type": w.meta.gait_type.value,
                     "foot": w.meta.foot.value, "trial_index": w.meta.trial_index,
                     "stride_index": w.meta.stride_index, "n_valid": w.n_valid} for w in windows],
    })


def read_window_cache(path) -> list[StrideWindow]:
    path = Path(path)
    side = read_json(path.with_suffix(path.suffix + ".json"))
    length, count = side["window_len"], side["count"]
    raw = path.read_bytes()
    rec = 8 * (1 + length * N_CHANNELS)
    if len(raw) != rec * count:
        raise ParseError(path, None, f"expected {count} records of {rec} bytes, file has {len(raw)} bytes")
    arr = np.frombuffer(raw, dtype="<f8").reshape(count, 1 + length * N_CHANNELS)
    out = []
    for row, m in zip(arr, side["windows"]):
        meta = WindowMeta(m["subject_id"], GaitType(m["gait_type"]), Foot(m["foot"]),
                          m["trial_index"], m["stride_index"])
        out.append(StrideWindow(row[1:].reshape(length, N_CHANNELS).astype(np.float64),
                                float(row[0]), meta, m["n_valid"]))
    return out
