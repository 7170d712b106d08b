"""``gaitlab`` command line: synth | zupt | train | eval | compare | transfer | export-plots.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 threshold failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as exp, io, reports, zupt
from .config import ConfigError, dump_config, load_config
from .nn import write_history_csv
from .nn.serialize import ModelFormatError

OK, VALIDATION, IO_ERROR, THRESHOLD = 0, 2, 3, 4

# pathological rows of the comparison must improve on ZUPT by at least this much
MIN_IMPROVEMENT_PCT = 35.0

log = logging.getLogger("gaitlab")


class MissingInput(OSError):
    pass


def _config(args):
    overrides = dict(kv.split("=", 1) for kv in args.set or [] if "=" in kv)
    bad = [kv for kv in args.set or [] if "=" not in kv]
    if bad:
        raise ConfigError(f"--set expects section.key=value, got {bad[0]!r}")
    if args.seed is not None:
        overrides["experiment.seed"] = str(args.seed)
    if args.out is not None:
        overrides["experiment.out"] = args.out
    if args.discard_boundary:
        overrides["experiment.discard_boundary"] = "true"
    return load_config(args.config, overrides)


def _out(cfg, *parts) -> Path:
    path = Path(cfg.out, *parts)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dataset(cfg, args):
    if getattr(args, "data", None):
        trials = io.read_dataset(args.data)
        return exp.synth.Dataset(trials, io.read_json(Path(args.data) / "manifest.json"))
    return exp.build_dataset(cfg)


def _load_trained(cfg, args) -> exp.TrainedModel:
    directory = Path(args.model) if getattr(args, "model", None) else Path(cfg.out, "model")
    if not (directory / "model.bin").exists():
        raise MissingInput(f"no trained model in {directory}; run `gaitlab train --out {cfg.out}` first")
    return exp.TrainedModel.load(directory)


def cmd_synth(cfg, args) -> int:
    ds = exp.build_dataset(cfg)
    data_dir = _out(cfg, "data")
    io.write_dataset(data_dir, ds)
    windows = exp.dataset_windows(ds)
    io.write_window_cache(data_dir / "windows.bin", windows)
    print(f"wrote {len(ds)} trials and {len(windows)} stride windows to {data_dir}")
    return OK


def cmd_zupt(cfg, args) -> int:
    trial = io.read_trial_csv(args.trial)
    nav = zupt.navigate(trial, cfg.zupt)
    intervals = zupt.zupt_segment(nav.stationary_mask)
    lengths = zupt.zupt_stride_lengths(nav, intervals)
    print("stride,start,stop,length_m")
    for i, ((a, b), length) in enumerate(zip(intervals, lengths)):
        print(f"{i},{a},{b},{length:.4f}")
    if args.debug_csv:
        zupt.write_debug_csv(args.debug_csv, trial, nav)
    return OK


def cmd_train(cfg, args) -> int:
    ds = _dataset(cfg, args)
    train_w, test_w = exp.split_windows(exp.dataset_windows(ds), cfg.held_out)
    trained = exp.train_cnn(cfg, train_w, test_w if args.validate else ())
    model_dir = _out(cfg, "model")
    trained.save(model_dir)
    write_history_csv(model_dir / "history.csv", trained.history)
    reports.write_text(model_dir / "config.ini", dump_config(cfg))
    print(f"trained on {len(train_w)} windows for {len(trained.history)} epochs; model in {model_dir}")
    return OK


def cmd_eval(cfg, args) -> int:
    trained = _load_trained(cfg, args)
    records = exp.held_out_records(cfg, trained, _dataset(cfg, args))
    out_dir = _out(cfg, "eval")
    texts = exp.write_eval_outputs(out_dir, records, cfg.discard_boundary)
    print(texts["eval.csv"], end="")
    return OK


def cmd_compare(cfg, args) -> int:
    trained = _load_trained(cfg, args)
    result = exp.run_compare(cfg, _dataset(cfg, args), trained)
    out_dir = _out(cfg, "compare")
    reports.write_text(out_dir / "comparison_raw.csv", result.raw_csv())
    reports.write_text(out_dir / "comparison.csv", reports.comparison_csv(result.report))
    print(reports.comparison_table(result.report), end="")
    if args.check:
        imp = result.report.row("Pathological").improvement_pct
        if imp is None or imp < MIN_IMPROVEMENT_PCT:
            print(f"FAIL: pathological improvement {imp}% < {MIN_IMPROVEMENT_PCT}%")
            return THRESHOLD
    return OK


def cmd_transfer(cfg, args) -> int:
    pretrained = _load_trained(cfg, args)
    results = [exp.run_transfer(cfg, pretrained, s) for s in cfg.transfer.seeds]
    out_dir = _out(cfg, "transfer")
    reports.write_text(out_dir / "transfer.csv", exp.transfer_report_csv(results))
    for r in results:
        print(f"seed {r.seed}")
        print(reports.transfer_table(r.stats()), end="")
    if args.check:
        wins = sum(r.tuned.rmse_m < r.frozen.rmse_m for r in results)
        if wins * 2 <= len(results) or not all(r.features_unchanged for r in results):
            print(f"FAIL: fine-tuning helped in {wins} of {len(results)} seeds")
            return THRESHOLD
    return OK


def cmd_export_plots(cfg, args) -> int:
    source = Path(args.predictions) if args.predictions else Path(cfg.out, "eval", "predictions.csv")
    if not source.exists():
        raise MissingInput(f"no predictions at {source}; run `gaitlab eval --out {cfg.out}` first")
    records = reports.read_predictions(source)
    out_dir = _out(cfg, "plots")
    for name, text in exp.derived_reports(records, cfg.discard_boundary).items():
        reports.write_text(out_dir / name, text)
    print(f"wrote plot data for {len(records)} strides to {out_dir}")
    return OK


COMMANDS = {
    "synth": cmd_synth, "zupt": cmd_zupt, "train": cmd_train, "eval": cmd_eval,
    "compare": cmd_compare, "transfer": cmd_transfer, "export-plots": cmd_export_plots,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment config")
    common.add_argument("--seed", type=int, help="overrides experiment.seed")
    common.add_argument("--out", help="output directory, overrides experiment.out")
    common.add_argument("--discard-boundary", action="store_true",
                        help="drop the first and last stride of every trial before reporting")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override any config key")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gaitlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p = sub.add_parser("zupt", parents=[common], help="run ZUPT on one trial CSV")
    p.add_argument("trial")
    p.add_argument("--debug-csv")
    for name, help_text in (("train", "train the CNN"), ("eval", "evaluate a trained CNN"),
                            ("compare", "CNN versus ZUPT on held-out strides"),
                            ("transfer", "fine-tune on a shifted cohort")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--data", help="dataset directory written by synth (default: regenerate)")
        if name != "train":
            p.add_argument("--model", help="model directory (default: OUT/model)")
        if name in ("compare", "transfer"):
            p.add_argument("--check", action="store_true", help="exit 4 if the acceptance threshold fails")
        if name == "train":
            p.add_argument("--validate", action="store_true", help="track held-out loss per epoch")
    p = sub.add_parser("export-plots", parents=[common], help="plot data files from raw predictions")
    p.add_argument("--predictions", help="raw predictions CSV (default: OUT/eval/predictions.csv)")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return VALIDATION if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except (io.ParseError, ModelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION


if __name__ == "__main__":
    sys.exit(main())
