"""Command-line interface.

Subcommands: simulate, train, evaluate, novelty, report, reproduce.
Values resolve flag > config file > built-in default; the output
directory can additionally be forced with the GAZESCREEN_OUTDIR
environment variable. Exit codes: 0 success, 2 configuration error,
3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import metrics as metrics_mod
from .data import atomic_write_text, load_csv, write_csv
from .errors import (
    ConfigError,
    DataError,
    GazeScreenError,
    NumericError,
    PipelineError,
)
from .pipeline import (
    OUTDIR_ENV_VAR,
    RunConfig,
    evaluate_saved_models,
    reproduce,
    run_config_from_ini,
    run_experiment,
    run_novelty,
    synthesize_cohort,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _exit_code_for(err):
    cause = err.cause if isinstance(err, PipelineError) else err
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, DataError):
        return EXIT_DATA
    if isinstance(cause, NumericError):
        return EXIT_NUMERIC
    return 1


def _load_config(args):
    """RunConfig from --config (if given) with set flags layered on top."""
    cfg = run_config_from_ini(args.config) if args.config else RunConfig()
    updates = {}
    for name in ("test_kind", "n_control", "n_concussed", "csv_path", "seed",
                 "outdir", "test_fraction", "validation_fraction",
                 "balanced_per_class", "novelty_train", "novelty_test_per_class",
                 "grid_resolution", "weighting"):
        v = getattr(args, name, None)
        if v is not None:
            updates[name] = v
    if getattr(args, "models", None):
        updates["models"] = tuple(m.strip() for m in args.models.split(","))
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    resolved = cfg.resolved_outdir()
    if resolved != cfg.outdir:
        cfg = dataclasses.replace(cfg, outdir=resolved)
    return cfg


def _add_common(p):
    p.add_argument("--config", help="INI file with a [run] section")
    p.add_argument("--test-kind", dest="test_kind", choices=("SP", "VMS"))
    p.add_argument("--n-control", dest="n_control", type=int)
    p.add_argument("--n-concussed", dest="n_concussed", type=int)
    p.add_argument("--csv-path", dest="csv_path")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", dest="outdir")
    p.add_argument("--models", help="comma-separated model kinds (e.g. RF,NB,SVC)")
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--validation-fraction", dest="validation_fraction", type=float)
    p.add_argument("--balanced-per-class", dest="balanced_per_class", type=int)
    p.add_argument("--weighting", choices=("auto", "class-weights", "balanced-subset"))
    p.add_argument("--novelty-train", dest="novelty_train", type=int)
    p.add_argument("--novelty-test-per-class", dest="novelty_test_per_class", type=int)
    p.add_argument("--grid-resolution", dest="grid_resolution", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gazescreen",
        description="Simulate screening sessions and run the classification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic cohort CSV")
    _add_common(p)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("train", help="fit the configured models; writes models + report")
    _add_common(p)

    p = sub.add_parser("evaluate", help="evaluate saved models on a CSV")
    p.add_argument("--data", required=True, help="gaze CSV to evaluate on")
    p.add_argument("--test-kind", dest="test_kind", choices=("SP", "VMS"), default="SP")
    p.add_argument("--models-dir", required=True, help="directory of model JSON files")
    p.add_argument("--out-dir", dest="outdir", default=".")

    p = sub.add_parser("novelty", help="fit novelty detectors and export boundary grids")
    _add_common(p)

    p = sub.add_parser("report", help="re-render a report CSV as a text table")
    p.add_argument("--metrics-csv", required=True)
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--title", default="Evaluation on held-out test frames")

    p = sub.add_parser("reproduce", help="run both experiments plus novelty under one seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", dest="outdir", default="runs/reproduce")
    p.add_argument("--n-control", dest="n_control", type=int, default=100)
    p.add_argument("--n-concussed", dest="n_concussed", type=int, default=100)
    p.add_argument("--models")
    p.add_argument("--balanced-per-class", dest="balanced_per_class", type=int, default=8000)
    p.add_argument("--train-caps", dest="train_caps", help="JSON dict, e.g. {\"SVC\": 4000}")
    p.add_argument("--novelty-train", dest="novelty_train", type=int, default=10000)
    p.add_argument("--novelty-test-per-class", dest="novelty_test_per_class",
                   type=int, default=5000)
    p.add_argument("--grid-resolution", dest="grid_resolution", type=int, default=100)
    return parser


def _cmd_simulate(args):
    cfg = _load_config(args)
    ds = synthesize_cohort(cfg)
    write_csv(ds, args.out)
    print(f"wrote {len(ds)} frames ({cfg.n_control}+{cfg.n_concussed} sessions, "
          f"{cfg.test_kind}) to {args.out}")
    return 0


def _cmd_train(args):
    cfg = _load_config(args)
    result = run_experiment(cfg)
    with open(result.report_txt_path) as fh:
        print(fh.read(), end="")
    print(f"\nreport: {result.report_csv_path}\nmanifest: {result.manifest_path}")
    return 0


def _cmd_evaluate(args):
    ds = load_csv(args.data, args.test_kind)
    paths = sorted(
        os.path.join(args.models_dir, f) for f in os.listdir(args.models_dir)
        if f.endswith(".json") and f != "manifest.json")
    if not paths:
        raise ConfigError(f"no model files in {args.models_dir}")
    per_model = evaluate_saved_models(paths, ds)
    outdir = os.environ.get(OUTDIR_ENV_VAR, "") or args.outdir
    os.makedirs(outdir, exist_ok=True)
    title = f"Evaluation on {os.path.basename(args.data)} ({args.test_kind})"
    text = metrics_mod.render_report_text(per_model, title)
    atomic_write_text(os.path.join(outdir, "report.txt"), text)
    atomic_write_text(os.path.join(outdir, "report.csv"),
                      metrics_mod.render_report_csv(per_model))
    print(text, end="")
    return 0


def _cmd_novelty(args):
    cfg = _load_config(args)
    paths = run_novelty(cfg)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_report(args):
    with open(args.metrics_csv) as fh:
        parsed = metrics_mod.parse_report_csv(fh.read())
    per_model = {}
    for model, vals in parsed.items():
        per_model[model] = metrics_mod.MetricSet(
            accuracy=vals.get("Accuracy", float("nan")),
            sensitivity=vals.get("Sensitivity", float("nan")),
            specificity=vals.get("Specificity", float("nan")),
            precision=vals.get("Precision", float("nan")),
            f1=vals.get("F1-score", float("nan")),
            auc=vals.get("AUC", float("nan")))
    text = metrics_mod.render_report_text(per_model, args.title)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        print(text, end="")
    return 0


def _cmd_reproduce(args):
    kwargs = dict(seed=args.seed, outdir=args.outdir,
                  n_control=args.n_control, n_concussed=args.n_concussed,
                  balanced_per_class=args.balanced_per_class,
                  novelty_train=args.novelty_train,
                  novelty_test_per_class=args.novelty_test_per_class,
                  grid_resolution=args.grid_resolution)
    if args.models:
        kwargs["models"] = tuple(m.strip() for m in args.models.split(","))
    if args.train_caps:
        try:
            kwargs["train_caps"] = json.loads(args.train_caps)
        except json.JSONDecodeError as e:
            raise ConfigError(f"--train-caps must be JSON: {e}") from None
    results = reproduce(**kwargs)
    for kind in ("SP", "VMS"):
        print(f"{kind}: report {results[kind].report_csv_path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "novelty": _cmd_novelty,
    "report": _cmd_report,
    "reproduce": _cmd_reproduce,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return _exit_code_for(e)
    except GazeScreenError as e:
        print(f"error ({args.command}): {e}", file=sys.stderr)
        return _exit_code_for(e)
    except FileNotFoundError as e:
        print(f"error ({args.command}): {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
