"""Experiment configuration read from INI-style ``key = value`` files.

Sections and keys mirror the fields below; unknown sections or keys are
rejected. ``#`` and ``;`` start comment lines. Lists are comma separated.

    [experiment]
    seed = 0
    out = runs/default

    [dataset]
    n_subjects = 10
    trials_per_pattern = 3
    noise = default          # default | none
    accel_noise_std = 0.25   # optional overrides of the noise preset

    [split]
    held_out = 10

    [zupt]
    gamma = 20

    [train]
    optimizer = adam
    epochs = 25
    schedule = cosine

    [transfer]
    support_windows = 20
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .nn.train import TrainConfig
from .synth import DEFAULT_STRIDES, SensorNoiseConfig
from .types import GaitType
from .zupt import ZuptConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    n_subjects: int = 10
    trials_per_pattern: int = 3
    sample_rate_hz: float = 200.0
    noise: str = "default"
    strides_normal: int = DEFAULT_STRIDES[GaitType.NORMAL]
    strides_shuffle: int = DEFAULT_STRIDES[GaitType.SHUFFLE]
    strides_stroke: int = DEFAULT_STRIDES[GaitType.STROKE]
    noise_overrides: tuple = ()

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ConfigError("dataset.n_subjects must be >= 2")
        if self.trials_per_pattern < 1:
            raise ConfigError("dataset.trials_per_pattern must be >= 1")
        if self.noise not in ("default", "none"):
            raise ConfigError("dataset.noise must be 'default' or 'none'")

    def noise_config(self) -> SensorNoiseConfig:
        base = SensorNoiseConfig.default() if self.noise == "default" else SensorNoiseConfig()
        return replace(base, **dict(self.noise_overrides))

    def strides(self) -> dict:
        return {GaitType.NORMAL: self.strides_normal, GaitType.SHUFFLE: self.strides_shuffle,
                GaitType.STROKE: self.strides_stroke}


@dataclass(frozen=True)
class TransferConfig:
    n_subjects: int = 10
    trials_per_pattern: int = 2
    support_windows: int = 20
    eval_windows: int = 1200
    epochs: int = 30
    learning_rate: float = 1e-4
    batch_size: int = 20
    seeds: tuple = (0, 1, 2)


# Adam with cosine decay fits within the run-time budget; the dense head
# steps 50x slower since its 36864 inputs otherwise let it memorise subjects
EXPERIMENT_TRAIN = TrainConfig(learning_rate=2e-3, batch_size=64, epochs=25, optimizer="adam",
                               fc_lr_scale=0.02, schedule="cosine")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "runs/default"
    discard_boundary: bool = False
    dataset: DatasetConfig = DatasetConfig()
    held_out: tuple = (10,)
    zupt: ZuptConfig = ZuptConfig()
    train: TrainConfig = EXPERIMENT_TRAIN
    transfer: TransferConfig = TransferConfig()

    def __post_init__(self):
        subjects = set(range(1, self.dataset.n_subjects + 1))
        if not self.held_out or not set(self.held_out) <= subjects:
            raise ConfigError(f"split.held_out {list(self.held_out)} must be a non-empty subset of "
                              f"subjects 1..{self.dataset.n_subjects}")
        if set(self.held_out) == subjects:
            raise ConfigError("split.held_out leaves no training subjects")


_NOISE_KEYS = {f.name for f in fields(SensorNoiseConfig)}


def _coerce(cls, section: str, key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(int(v) for v in raw.split(",") if v.strip())
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _apply(obj, section: str, items: dict):
    known = {f.name: getattr(obj, f.name) for f in fields(obj)}
    changes = {}
    for key, raw in items.items():
        if key not in known or key == "noise_overrides":
            raise ConfigError(f"unknown key [{section}] {key}")
        changes[key] = _coerce(type(obj), section, key, raw, known[key])
    try:
        return replace(obj, **changes)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def parse_config(text: str, source: str = "<config>",
                 overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse INI text; ``overrides`` maps ``section.key`` to a raw string value."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    sections = {s: dict(cp.items(s)) for s in cp.sections()}
    for dotted, value in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        sec, key = dotted.split(".", 1)
        sections.setdefault(sec, {})[key] = str(value)

    unknown = set(sections) - {"experiment", "dataset", "split", "zupt", "train", "transfer"}
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")

    exp = dict(sections.get("experiment", {}))
    base = ExperimentConfig.__dataclass_fields__
    seed = _coerce(None, "experiment", "seed", exp.pop("seed", "0"), 0)
    out = exp.pop("out", base["out"].default)
    discard = _coerce(None, "experiment", "discard_boundary", exp.pop("discard_boundary", "false"), False)
    if exp:
        raise ConfigError(f"unknown key [experiment] {sorted(exp)[0]}")

    ds_items = dict(sections.get("dataset", {}))
    noise_over = {k: ds_items.pop(k) for k in list(ds_items) if k in _NOISE_KEYS}
    try:
        dataset = _apply(DatasetConfig(), "dataset", ds_items)
        dataset = replace(dataset, noise_overrides=tuple(sorted(
            (k, _coerce(None, "dataset", k, v, 0.0)) for k, v in noise_over.items())))
        dataset.noise_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    split = dict(sections.get("split", {}))
    held_out = _coerce(None, "split", "held_out", split.pop("held_out", "10"), ())
    if split:
        raise ConfigError(f"unknown key [split] {sorted(split)[0]}")

    zupt = _apply(ZuptConfig(), "zupt", sections.get("zupt", {}))
    train = _apply(EXPERIMENT_TRAIN, "train", sections.get("train", {}))
    transfer = _apply(TransferConfig(), "transfer", sections.get("transfer", {}))
    try:
        return ExperimentConfig(seed=seed, out=out, discard_boundary=discard, dataset=dataset,
                                held_out=held_out, zupt=zupt, train=train, transfer=transfer)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    if path is None:
        return parse_config("", overrides=overrides)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path), overrides)


def dump_config(cfg: ExperimentConfig) -> str:
    """INI text that parses back to ``cfg``."""
    def line(k, v):
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        else:
            v = repr(v) if isinstance(v, float) else str(v)
        return f"{k} = {v}"

    out = ["[experiment]", line("seed", cfg.seed), line("out", cfg.out),
           line("discard_boundary", cfg.discard_boundary), "", "[dataset]"]
    ds = asdict(cfg.dataset)
    over = dict(ds.pop("noise_overrides"))
    out += [line(k, v) for k, v in ds.items()] + [line(k, v) for k, v in sorted(over.items())]
    out += ["", "[split]", line("held_out", cfg.held_out), "", "[zupt]"]
    out += [line(k, v) for k, v in asdict(cfg.zupt).items()]
    out += ["", "[train]"] + [line(k, v) for k, v in asdict(cfg.train).items()]
    out += ["", "[transfer]"] + [line(k, v) for k, v in asdict(cfg.transfer).items()]
    return "\n".join(out) + "\n"
