"""End-to-end experiment orchestration: simulate or load data, split,
weight, fit every requested model, evaluate, and render the report table,
with a manifest recording config, seeds, content hashes and stage timings.

Model training is sequential and fully seeded, so two runs with the same
config produce byte-identical report CSVs (the acceptance bar for
reproducibility); the manifest additionally carries wall-clock timings and
is therefore not expected to be identical between runs.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import metrics as metrics_mod
from .data import (
    GazeDataset,
    SplitConfig,
    atomic_write_text,
    balanced_subset,
    class_weights,
    load_csv,
    split,
)
from .errors import (
    ConfigError,
    GazeScreenError,
    InvalidSpec,
    PipelineError,
    SingleClass,
)
from .models import (
    DISPLAY_NAMES,
    MODEL_KINDS,
    AdaBoostParams,
    FeatureMatrix,
    ForestParams,
    GpcParams,
    LogRegParams,
    NBParams,
    PerceptronParams,
    SvcParams,
    TreeParams,
    fit_adaboost,
    fit_decision_tree,
    fit_gpc,
    fit_logreg,
    fit_naive_bayes,
    fit_perceptron,
    fit_random_forest,
    fit_svc_rbf,
    load_model,
)
from .novelty import (
    IsoForestParams,
    OcsvmParams,
    export_boundary_grid,
    fit_isolation_forest,
    fit_ocsvm,
)
from .simulate import ImpairmentParams, generate_cohort

# models whose protocol trains on a balanced subset instead of class weights
BALANCED_SUBSET_KINDS = ("NB", "ADA", "GPC")

DEFAULT_TRAIN_CAPS = {"SVC": 16000, "RF": 16000, "GPC": 1000}

EYE_CHANNELS = ("left", "right", "cyclopean")

OUTDIR_ENV_VAR = "GAZESCREEN_OUTDIR"


@dataclass
class RunConfig:
    """One experiment: data source, split, weighting, models, novelty.

    Data comes from `csv_path` when set, otherwise from simulating
    n_control + n_concussed sessions of `test_kind`. `train_caps` bounds
    per-model training sizes (stratified subsample) so quadratic solvers
    stay desk-sized; `weighting` is 'auto' (class weights, except the
    balanced-subset models), 'class-weights', or 'balanced-subset'.
    """

    test_kind: str = "SP"
    n_control: int = 100
    n_concussed: int = 100
    csv_path: str = None
    seed: int = 0
    outdir: str = "runs/out"
    models: tuple = tuple(MODEL_KINDS)
    test_fraction: float = 0.2
    validation_fraction: float = 0.1
    stratified: bool = True
    weighting: str = "auto"
    balanced_per_class: int = 8000
    train_caps: dict = field(default_factory=lambda: dict(DEFAULT_TRAIN_CAPS))
    allow_weighted_balanced_models: bool = False
    hyper_overrides: dict = field(default_factory=dict)
    control_overrides: dict = field(default_factory=dict)
    concussed_overrides: dict = field(default_factory=dict)
    # novelty stage
    novelty_train: int = 10000
    novelty_test_per_class: int = 5000
    grid_resolution: int = 100
    novelty_methods: tuple = ("iforest", "ocsvm")
    allow_mixed_novelty_training: bool = False

    def __post_init__(self):
        if self.test_kind not in ("SP", "VMS"):
            raise InvalidSpec(f"test_kind must be SP or VMS, got {self.test_kind!r}")
        if self.weighting not in ("auto", "class-weights", "balanced-subset"):
            raise InvalidSpec(f"unknown weighting mode {self.weighting!r}")
        unknown = [m for m in self.models if m not in MODEL_KINDS]
        if unknown:
            raise InvalidSpec(f"unknown model kind(s) {unknown}; valid: {MODEL_KINDS}")
        if self.weighting == "class-weights" and not self.allow_weighted_balanced_models:
            clash = [m for m in self.models if m in BALANCED_SUBSET_KINDS]
            if clash:
                raise InvalidSpec(
                    f"{clash} train on balanced subsets by protocol; pass "
                    "allow_weighted_balanced_models=True to override")
        if self.seed < 0:
            raise InvalidSpec("seed must be >= 0")

    def resolved_outdir(self):
        """outdir with the environment override applied; entry points (CLI,
        reproduce) call this once so nested stages keep their subdirectories."""
        return os.environ.get(OUTDIR_ENV_VAR, "") or self.outdir

    def split_config(self):
        return SplitConfig(test_fraction=self.test_fraction,
                           validation_fraction=self.validation_fraction,
                           seed=self.seed, stratified=self.stratified)


_BOOL_KEYS = {"stratified", "allow_weighted_balanced_models", "allow_mixed_novelty_training"}
_INT_KEYS = {"n_control", "n_concussed", "seed", "balanced_per_class",
             "novelty_train", "novelty_test_per_class", "grid_resolution"}
_FLOAT_KEYS = {"test_fraction", "validation_fraction"}
_TUPLE_KEYS = {"models", "novelty_methods"}
_DICT_KEYS = {"train_caps", "hyper_overrides", "control_overrides", "concussed_overrides"}


def run_config_from_ini(path, section="run"):
    """Read a RunConfig from an INI file. Dict-valued keys take JSON;
    tuple-valued keys take comma-separated lists."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise InvalidSpec(f"cannot read config file {path}")
    if not parser.has_section(section):
        raise InvalidSpec(f"{path}: missing [{section}] section")
    valid = {f.name for f in fields(RunConfig)}
    kwargs = {}
    for key, raw in parser.items(section):
        if key not in valid:
            raise InvalidSpec(f"{path} [{section}]: unknown key {key!r}")
        try:
            if key in _BOOL_KEYS:
                kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _TUPLE_KEYS:
                kwargs[key] = tuple(v.strip() for v in raw.split(",") if v.strip())
            elif key in _DICT_KEYS:
                kwargs[key] = json.loads(raw)
            else:
                kwargs[key] = raw
        except (ValueError, json.JSONDecodeError) as e:
            raise InvalidSpec(f"{path} [{section}]: bad value for {key}: {e}") from None
    return RunConfig(**kwargs)


def run_config_to_ini_text(cfg, section="run"):
    parser = configparser.ConfigParser()
    parser.add_section(section)
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name in _TUPLE_KEYS:
            parser.set(section, f.name, ",".join(v))
        elif f.name in _DICT_KEYS:
            parser.set(section, f.name, json.dumps(v))
        else:
            parser.set(section, f.name, str(v))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# -- model dispatch -------------------------------------------------------------

_PARAM_TYPES = {
    "NB": NBParams, "DT": TreeParams, "RF": ForestParams, "SVC": SvcParams,
    "ADA": AdaBoostParams, "GPC": GpcParams, "LR": LogRegParams,
    "PERC": PerceptronParams,
}


def make_params(kind, overrides=None):
    cls = _PARAM_TYPES[kind]
    try:
        return cls(**(overrides or {}))
    except TypeError as e:
        raise InvalidSpec(f"{kind}: {e}") from None


def fit_model(kind, fm, params=None, seed=0):
    """Dispatch to the model-specific fit with its params record."""
    if kind == "NB":
        return fit_naive_bayes(fm, params)
    if kind == "DT":
        return fit_decision_tree(fm, params)
    if kind == "RF":
        return fit_random_forest(fm, params, seed=seed)
    if kind == "SVC":
        return fit_svc_rbf(fm, params, seed=seed)
    if kind == "ADA":
        return fit_adaboost(fm, params, seed=seed)
    if kind == "GPC":
        return fit_gpc(fm, params, seed=seed)
    if kind == "LR":
        return fit_logreg(fm, params)
    if kind == "PERC":
        return fit_perceptron(fm, params, seed=seed)
    raise InvalidSpec(f"unknown model kind {kind!r}")


def _stratified_cap(ds, cap, seed):
    """Stratified subsample down to cap rows (largest-remainder per class)."""
    if len(ds) <= cap:
        return ds
    from .data import _allocate_per_class  # shared arithmetic
    n0, n1 = ds.class_counts()
    take = _allocate_per_class((n0, n1), cap)
    rng = np.random.default_rng(seed)
    picked = [rng.choice(np.nonzero(ds.labels == c)[0], size=take[c], replace=False)
              for c in (0, 1) if take[c] > 0]
    return ds.subset(np.concatenate(picked))


def training_matrix(kind, train_ds, cfg):
    """Apply the per-model weighting protocol and training-size cap.

    Returns (FeatureMatrix, description dict for the manifest).
    """
    cap = cfg.train_caps.get(kind)
    mode = cfg.weighting
    if mode == "auto":
        mode = "balanced-subset" if kind in BALANCED_SUBSET_KINDS else "class-weights"
    info = {"weighting": mode}
    if mode == "balanced-subset":
        per_class = cfg.balanced_per_class
        if cap is not None:
            per_class = min(per_class, cap // 2)
        sub = balanced_subset(train_ds, per_class, seed=cfg.seed)
        info["per_class"] = per_class
        return FeatureMatrix.from_dataset(sub), info
    capped = _stratified_cap(train_ds, cap, cfg.seed) if cap is not None else train_ds
    cw = class_weights(capped)
    info["train_rows"] = len(capped)
    info["class_weights"] = [cw.control, cw.concussed]
    return FeatureMatrix.from_dataset(capped, cw.per_sample(capped.labels)), info


# -- stage bookkeeping ------------------------------------------------------------

class _Stages:
    def __init__(self):
        self.timings = []

    def run(self, name, detail, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kwargs)
        except GazeScreenError as e:
            raise PipelineError(name, detail, e) from e
        self.timings.append({"stage": name, "seconds": time.perf_counter() - t0})
        return out


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_output(path, text, outputs):
    atomic_write_text(path, text)
    outputs[os.path.basename(path)] = hashlib.sha256(text.encode()).hexdigest()


def synthesize_cohort(cfg):
    """Simulate the configured cohort, applying any per-field impairment
    overrides on top of the label defaults."""
    ctl = dict(cfg.control_overrides)
    con = dict(cfg.concussed_overrides)
    base_c = asdict(ImpairmentParams.control())
    base_k = asdict(ImpairmentParams.concussed())
    bad = (set(ctl) | set(con)) - set(base_c)
    if bad:
        raise InvalidSpec(f"unknown impairment override(s) {sorted(bad)}")
    return generate_cohort(
        cfg.n_control, cfg.n_concussed, cfg.test_kind, base_seed=cfg.seed,
        control_impairment=ImpairmentParams(**{**base_c, **ctl}),
        concussed_impairment=ImpairmentParams(**{**base_k, **con}))


def _acquire(cfg):
    if cfg.csv_path:
        return load_csv(cfg.csv_path, cfg.test_kind)
    return synthesize_cohort(cfg)


# -- experiment runner -------------------------------------------------------------

@dataclass
class ExperimentResult:
    per_model: dict           # display name -> MetricSet
    report_txt_path: str
    report_csv_path: str
    manifest_path: str
    model_paths: dict
    timings: list


def run_experiment(cfg):
    """Simulate/load -> split -> per-model weight/cap/fit -> evaluate ->
    report + manifest. Returns an ExperimentResult."""
    outdir = cfg.outdir
    os.makedirs(os.path.join(outdir, "models"), exist_ok=True)
    stages = _Stages()
    outputs = {}

    source = cfg.csv_path or f"synthetic cohort ({cfg.n_control}+{cfg.n_concussed} {cfg.test_kind})"
    ds = stages.run("acquire", source, _acquire, cfg)
    train_ds, val_ds, test_ds = stages.run(
        "split", f"{len(ds)} frames", split, ds, cfg.split_config())

    per_model = {}
    model_paths = {}
    model_info = {}
    for kind in cfg.models:
        fm, info = stages.run("weight", f"model {kind}", training_matrix,
                              kind, train_ds, cfg)
        params = make_params(kind, cfg.hyper_overrides.get(kind))
        model = stages.run("fit", f"model {kind} ({fm.n} rows)",
                           fit_model, kind, fm, params, cfg.seed)
        path = os.path.join(outdir, "models", f"{kind}.json")
        model.save(path)
        outputs[f"models/{kind}.json"] = _sha256_file(path)
        model_paths[kind] = path
        name = DISPLAY_NAMES[kind]
        pred = stages.run("evaluate", f"model {kind}", model.predict, test_ds.features)
        scores = model.decision_score(test_ds.features)
        per_model[name] = metrics_mod.evaluate_predictions(test_ds.labels, pred, scores)
        model_info[kind] = info
    title = f"Evaluation on held-out test frames ({cfg.test_kind})"
    report_txt = metrics_mod.render_report_text(per_model, title)
    report_csv = metrics_mod.render_report_csv(per_model)
    txt_path = os.path.join(outdir, "report.txt")
    csv_path = os.path.join(outdir, "report.csv")
    _write_output(txt_path, report_txt, outputs)
    _write_output(csv_path, report_csv, outputs)

    manifest_path = os.path.join(outdir, "manifest.json")
    manifest = {
        "tool": "gazescreen",
        "command": "experiment",
        "config": _config_dict(cfg),
        "data": {
            "source": source,
            "sha256": _sha256_file(cfg.csv_path) if cfg.csv_path else None,
            "frames": len(ds),
            "split": {"train": len(train_ds), "validation": len(val_ds),
                      "test": len(test_ds)},
        },
        "models": model_info,
        "stages": stages.timings,
        "outputs": outputs,
    }
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True))
    return ExperimentResult(per_model, txt_path, csv_path, manifest_path,
                            model_paths, stages.timings)


def _config_dict(cfg):
    d = asdict(cfg)
    d["models"] = list(cfg.models)
    d["novelty_methods"] = list(cfg.novelty_methods)
    return d


def evaluate_saved_models(model_paths, test_ds):
    """Re-evaluate serialised models on a dataset; returns {display: MetricSet}."""
    per_model = {}
    for path in model_paths:
        model = load_model(path)
        name = DISPLAY_NAMES.get(model.kind, model.kind)
        pred = model.predict(test_ds.features)
        scores = model.decision_score(test_ds.features)
        per_model[name] = metrics_mod.evaluate_predictions(test_ds.labels, pred, scores)
    return per_model


# -- novelty runner -----------------------------------------------------------------

def run_novelty(cfg):
    """Fit control-only detectors per eye channel and export boundary grids.

    Uses (x, y) direction components of one eye at a time, mirroring the
    per-eye scatter panels of the screening figures. Produces
    {method}_{kind}_{eye}.csv files and a manifest.
    """
    outdir = cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    stages = _Stages()
    outputs = {}

    ds = stages.run("acquire", f"novelty cohort {cfg.test_kind}", _acquire, cfg)
    train_ds, _, test_ds = stages.run("split", f"{len(ds)} frames",
                                      split, ds, cfg.split_config())
    rng = np.random.default_rng(cfg.seed)
    if cfg.allow_mixed_novelty_training:
        pool_idx = np.arange(len(train_ds))
    else:
        # training pool must be regular-only for novelty detection
        pool_idx = np.nonzero(train_ds.labels == 0)[0]
    if pool_idx.size == 0:
        raise PipelineError("novelty-train", "control pool",
                            SingleClass("no control frames to train on"))
    take = min(cfg.novelty_train, pool_idx.size)
    train_pool = train_ds.subset(rng.choice(pool_idx, size=take, replace=False))

    per_class = cfg.novelty_test_per_class
    n0, n1 = test_ds.class_counts()
    test_parts = []
    for c, avail in ((0, n0), (1, n1)):
        k = min(per_class, avail)
        if k == 0:
            raise PipelineError("novelty-test", f"class {c}",
                                SingleClass(f"no class-{c} frames in the test split"))
        test_parts.append(test_ds.subset(
            rng.choice(np.nonzero(test_ds.labels == c)[0], size=k, replace=False)))
    test_reg, test_nov = test_parts

    grid_paths = []
    for method in cfg.novelty_methods:
        for eye in EYE_CHANNELS:
            Xtr = train_pool.eye_dirs(eye)[:, :2]
            Xreg = test_reg.eye_dirs(eye)[:, :2]
            Xnov = test_nov.eye_dirs(eye)[:, :2]
            if method == "iforest":
                model = stages.run("novelty-fit", f"iforest {eye}",
                                   fit_isolation_forest, Xtr,
                                   IsoForestParams(seed=cfg.seed))
            elif method == "ocsvm":
                model = stages.run("novelty-fit", f"ocsvm {eye}",
                                   fit_ocsvm, Xtr, OcsvmParams())
            else:
                raise PipelineError("novelty-fit", method,
                                    InvalidSpec(f"unknown novelty method {method!r}"))
            grid = stages.run("novelty-grid", f"{method} {eye}",
                              export_boundary_grid, model, Xtr, Xreg, Xnov,
                              dims=(0, 1), resolution=cfg.grid_resolution)
            path = os.path.join(outdir, f"{method}_{cfg.test_kind}_{eye}.csv")
            text = grid.to_csv_text()
            _write_output(path, text, outputs)
            grid_paths.append(path)

    manifest_path = os.path.join(outdir, "manifest.json")
    manifest = {
        "tool": "gazescreen",
        "command": "novelty",
        "config": _config_dict(cfg),
        "data": {"train_rows": len(train_pool),
                 "test_regular": len(test_reg), "test_novel": len(test_nov)},
        "stages": stages.timings,
        "outputs": outputs,
    }
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True))
    return grid_paths


# -- full reproduction ----------------------------------------------------------------

def reproduce(seed=0, outdir="runs/reproduce", n_control=100, n_concussed=100,
              models=tuple(MODEL_KINDS), balanced_per_class=8000,
              train_caps=None, novelty_train=10000, novelty_test_per_class=5000,
              grid_resolution=100, novelty_methods=("iforest", "ocsvm")):
    """Run the SP experiment, the VMS experiment and both novelty stages
    under one seed; returns {section: result}."""
    outdir = os.environ.get(OUTDIR_ENV_VAR, "") or outdir
    caps = dict(DEFAULT_TRAIN_CAPS) if train_caps is None else dict(train_caps)
    results = {}
    for kind in ("SP", "VMS"):
        cfg = RunConfig(
            test_kind=kind, n_control=n_control, n_concussed=n_concussed,
            seed=seed, outdir=os.path.join(outdir, kind.lower()),
            models=tuple(models), balanced_per_class=balanced_per_class,
            train_caps=caps, novelty_train=novelty_train,
            novelty_test_per_class=novelty_test_per_class,
            grid_resolution=grid_resolution, novelty_methods=tuple(novelty_methods))
        results[kind] = run_experiment(cfg)
        nov_cfg = RunConfig(
            test_kind=kind, n_control=n_control, n_concussed=n_concussed,
            seed=seed, outdir=os.path.join(outdir, "novelty", kind.lower()),
            models=tuple(models), train_caps=caps,
            novelty_train=novelty_train,
            novelty_test_per_class=novelty_test_per_class,
            grid_resolution=grid_resolution, novelty_methods=tuple(novelty_methods))
        results[f"novelty-{kind}"] = run_novelty(nov_cfg)
    return results
