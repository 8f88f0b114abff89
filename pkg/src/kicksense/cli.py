"""Command-line interface.

Subcommands cover the full workflow: ``simulate`` writes a dataset of
run CSVs, ``train`` fits a model and saves a checkpoint, ``eval``
scores a checkpoint and renders report figures, ``ablate`` compares
architectures across seeds, ``stream`` exercises changing-pattern
recognition, and ``print-config`` shows the effective configuration.

Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 data-validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import evaluate as ev
from . import plots
from .config import ExperimentConfig, dump_config, load_config
from .data import SchemaError, export_dataset, ingest_manifest, split_dataset
from .flowsim import ConfigurationError, InvalidGeometryError, SensorGeometry
from .models import MODEL_KINDS, TASKS, ModelHyperparams, build_model
from .nn import sha256_of_file
from .signal import spectrogram, standardize
from .training import TrainSettings, load_model, save_model, train_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    sim_overrides = {}
    for name in ("seed", "noise_std_pa"):
        value = getattr(args, name, None)
        if value is not None:
            sim_overrides[name] = value
    if sim_overrides:
        cfg = replace(cfg, sim=replace(cfg.sim, **sim_overrides))
    for name in ("stride", "repetitions"):
        value = getattr(args, name, None)
        if value is not None:
            cfg = replace(cfg, **{name: value})
    return cfg


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _ensure_dir(args.out)
    manifest = export_dataset(
        out_dir,
        geometry=SensorGeometry(),
        config=cfg.sim,
        repetitions=cfg.repetitions,
        window=cfg.window,
        stride=cfg.stride,
    )
    print(f"wrote {len(manifest['runs'])} runs to {out_dir}")
    if args.plots:
        from .flowsim import read_run_csv

        first = manifest["runs"][0]
        run = read_run_csv(os.path.join(out_dir, first["file"]),
                           rest_samples=manifest["rest_samples"],
                           sample_rate_hz=manifest["sample_rate_hz"])
        fig_dir = _ensure_dir(os.path.join(out_dir, "figures"))
        plots.save_run_overview(run, os.path.join(fig_dir, "run_overview.png"), max_seconds=40.0)
        from .signal import subtract_baseline

        base = subtract_baseline(run.pressures, run.rest_samples)[run.rest_samples:]
        spec = spectrogram(standardize(base[: cfg.window]))
        plots.save_spectrogram(spec, os.path.join(fig_dir, "example_spectrogram.png"))
        print(f"figures in {fig_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    ds = ingest_manifest(args.data)
    splits = split_dataset(ds, split_seed=cfg.split_seed)
    settings = cfg.train
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.train_seed is not None:
        overrides["seed"] = args.train_seed
    if overrides:
        settings = replace(settings, **overrides)
    if args.verbose:
        settings = replace(settings, log_every=1)
    model = build_model(args.kind, args.task, ModelHyperparams(), seed=settings.seed)
    result = train_model(model, args.task, splits["train"], splits["val"], settings)
    out_dir = _ensure_dir(os.path.dirname(os.path.abspath(args.checkpoint)) or ".")
    save_model(args.checkpoint, model, settings, result.target_scaler,
               extra_meta={"split_seed": cfg.split_seed})
    snapshot = replace(cfg, train=settings)
    with open(os.path.join(out_dir, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(snapshot))
    ev.write_history_csv(result.history, os.path.join(out_dir, "history.csv"))
    plots.save_history(result.history, os.path.join(out_dir, "history.png"),
                       title=f"{args.kind} {args.task}")
    last = result.history[-1] if result.history else {}
    print(f"trained {args.kind} ({args.task}) in {result.wall_seconds:.1f}s; "
          f"final loss {last.get('loss', float('nan')):.4f}; checkpoint {args.checkpoint}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    ds = ingest_manifest(args.data)
    splits = split_dataset(ds, split_seed=cfg.split_seed)
    model, meta, scaler = load_model(args.checkpoint)
    mode = meta.get("standardize_mode", "per_sensor")
    report_dir = _ensure_dir(args.report)
    subset = splits[args.split]
    if model.task == "classification":
        result = ev.evaluate_classifier(model, subset, mode)
        result.confusion.write_csv(os.path.join(report_dir, "confusion.csv"))
        plots.save_confusion_heatmap(result.confusion, os.path.join(report_dir, "confusion.png"),
                                     title=f"{model.kind} on {args.split}")
        summary = {"kind": model.kind, "task": model.task, "split": args.split,
                   "split_seed": cfg.split_seed,
                   "checkpoint_sha256": sha256_of_file(args.checkpoint),
                   "n_windows": result.n, "accuracy": result.accuracy}
        print(f"accuracy {result.accuracy:.4f} on {result.n} {args.split} windows")
    else:
        if scaler is None:
            raise SchemaError(f"{args.checkpoint}: localization checkpoint lacks target scaler")
        report = ev.evaluate_regressor(model, subset, scaler, mode)
        report.write_csv(os.path.join(report_dir, "rmse.csv"))
        plots.save_rmse_by_pattern(report, os.path.join(report_dir, "rmse_by_pattern.png"))
        plots.save_rmse_by_ly(report, os.path.join(report_dir, "rmse_by_ly.png"))
        summary = {"kind": model.kind, "task": model.task, "split": args.split,
                   "split_seed": cfg.split_seed,
                   "checkpoint_sha256": sha256_of_file(args.checkpoint),
                   "n_windows": report.n, "rmse_x_mm": report.rmse_x_mm,
                   "rmse_y_mm": report.rmse_y_mm,
                   "within_tolerance_x": report.within_tolerance_x,
                   "within_tolerance_y": report.within_tolerance_y}
        print(f"RMSE L_x {report.rmse_x_mm:.1f} mm, L_y {report.rmse_y_mm:.1f} mm "
              f"on {report.n} {args.split} windows")
    with open(os.path.join(report_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(f"report in {report_dir}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _load_cfg(args)
    ds = ingest_manifest(args.data)
    splits = split_dataset(ds, split_seed=cfg.split_seed)
    kinds = tuple(args.kinds.split(","))
    for kind in kinds:
        if kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    seeds = tuple(int(s) for s in args.seeds.split(","))
    settings = cfg.train
    if args.epochs is not None:
        settings = replace(settings, epochs=args.epochs)
    result = ev.ablation_suite(splits, kinds=kinds, seeds=seeds, settings=settings, task=args.task)
    report_dir = _ensure_dir(args.report)
    if args.task == "classification":
        keys, descending = ("test_accuracy",), True
    else:
        keys, descending = ("rmse_x_mm", "rmse_y_mm"), False
    result.write_csv(os.path.join(report_dir, "ablation.csv"), keys[0])
    plots.save_ablation_bars(result, keys[0], os.path.join(report_dir, "ablation.png"))
    payload = {"seeds": list(result.seeds), "split_assignment": result.split_assignment,
               "task": result.task, "metrics": {}, "ordering": {}, "delta_vs_fusion": {}}
    for key in keys:
        table = {k: list(map(float, v)) for k, v in result.metric_table(key).items()}
        means = {k: float(np.mean(v)) for k, v in table.items()}
        payload["metrics"][key] = table
        payload["ordering"][key] = sorted(means, key=means.get, reverse=descending)
        if "fusion" in means:
            payload["delta_vs_fusion"][key] = {
                k: means[k] - means["fusion"] for k in means if k != "fusion"
            }
    with open(os.path.join(report_dir, "ablation.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    for key in keys:
        for kind, vals in result.metric_table(key).items():
            print(f"{kind}: {key} mean {np.mean(vals):.4f} over seeds {list(seeds)}")
    print(f"report in {report_dir}")
    return EXIT_OK


def cmd_stream(args) -> int:
    cfg = _load_cfg(args)
    model, meta, _ = load_model(args.checkpoint)
    if model.task != "classification":
        raise ConfigurationError("streaming recognition needs a classification checkpoint")
    run = ev.build_stream_run(config=cfg.sim, seed=cfg.sim.seed)
    result = ev.streaming_recognition(model, run, meta.get("standardize_mode", "per_sensor"))
    report_dir = _ensure_dir(args.report)
    result.write_csv(os.path.join(report_dir, "stream.csv"))
    plots.save_stream_trace(result, os.path.join(report_dir, "stream.png"))
    for s_time, delay in zip(result.switch_times, result.transients_s):
        if np.isfinite(delay):
            print(f"switch at {s_time:.1f}s recognised in {delay:.2f}s")
        else:
            print(f"switch at {s_time:.1f}s never settled within its segment")
    worst = result.max_transient_s()
    if np.isfinite(worst):
        print(f"max transient {worst:.2f}s; report in {report_dir}")
    else:
        print(f"transient unbounded (some switches never settled); report in {report_dir}")
    return EXIT_OK


def cmd_print_config(args) -> int:
    cfg = _load_cfg(args)
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kicksense",
                                     description="Pressure-array recognition of leg-kick patterns")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="INI config file")

    p_sim = sub.add_parser("simulate", help="simulate the experiment matrix to CSV")
    add_config(p_sim)
    p_sim.add_argument("--out", required=True, help="output dataset directory")
    p_sim.add_argument("--seed", type=int, help="simulation seed")
    p_sim.add_argument("--noise-std-pa", dest="noise_std_pa", type=float, help="sensor noise std [Pa]")
    p_sim.add_argument("--repetitions", type=int, help="repetitions per condition")
    p_sim.add_argument("--stride", type=int, help="window stride recorded in manifest")
    p_sim.add_argument("--plots", action="store_true", help="render overview figures")
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="train a model on an exported dataset")
    add_config(p_train)
    p_train.add_argument("--data", required=True, help="dataset directory from `simulate`")
    p_train.add_argument("--kind", default="fusion", choices=MODEL_KINDS)
    p_train.add_argument("--task", default="classification", choices=TASKS)
    p_train.add_argument("--checkpoint", required=True, help="output checkpoint path")
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--steps", type=int)
    p_train.add_argument("--train-seed", type=int)
    p_train.add_argument("--verbose", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint and render a report")
    add_config(p_eval)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--report", required=True, help="report output directory")
    p_eval.add_argument("--split", default="test", choices=("train", "val", "test"))
    p_eval.set_defaults(func=cmd_eval)

    p_abl = sub.add_parser("ablate", help="train several kinds across seeds and compare")
    add_config(p_abl)
    p_abl.add_argument("--data", required=True)
    p_abl.add_argument("--kinds", default="fusion,time,freq")
    p_abl.add_argument("--seeds", default="0,1,2")
    p_abl.add_argument("--task", default="classification", choices=TASKS)
    p_abl.add_argument("--epochs", type=int)
    p_abl.add_argument("--report", required=True)
    p_abl.set_defaults(func=cmd_ablate)

    p_stream = sub.add_parser("stream", help="changing-pattern recognition on a fresh stream")
    add_config(p_stream)
    p_stream.add_argument("--checkpoint", required=True)
    p_stream.add_argument("--report", required=True)
    p_stream.add_argument("--seed", type=int, help="stream simulation seed")
    p_stream.set_defaults(func=cmd_stream)

    p_cfg = sub.add_parser("print-config", help="show the effective configuration")
    add_config(p_cfg)
    p_cfg.set_defaults(func=cmd_print_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which matches our config-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigurationError, InvalidGeometryError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
