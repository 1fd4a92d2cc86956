"""Gaze-frame dataset container, CSV wire format, splits and class weighting.

A frame is one eye-tracker sample: timestamp, three unit gaze directions
(left, right, cyclopean) in a right-handed camera frame (+z forward, +x
right, +y up), two pupil diameters in millimetres, two eyelid openness
values in [0, 1], and a binary label (0 = control, 1 = concussed).
"""
from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadLabel,
    EmptyDataset,
    InsufficientClassSamples,
    InvalidSpec,
    LengthMismatch,
    MissingColumn,
    NonMonotonicTime,
    NonUnitDirection,
    SingleClass,
    SingleClassStratify,
)

COLUMNS = [
    "session_id", "t",
    "lx", "ly", "lz", "rx", "ry", "rz", "cx", "cy", "cz",
    "lpupil", "rpupil", "lopen", "ropen",
    "label",
]
FEATURE_COLUMNS = COLUMNS[1:15]  # everything except session_id and label
N_FEATURES = len(FEATURE_COLUMNS)

TEST_KINDS = ("SP", "VMS")

# column slices inside the feature matrix
_T = 0
_LEFT = slice(1, 4)
_RIGHT = slice(4, 7)
_CYC = slice(7, 10)
_LPUPIL, _RPUPIL, _LOPEN, _ROPEN = 10, 11, 12, 13

UNIT_NORM_TOL = 1e-6       # constructor invariant on direction norms
CSV_NORM_TOL = 1e-3        # loader re-normalises deviations up to this


def atomic_write_text(path, text):
    """Write text to path via a temp file + rename so readers never see
    a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class GazeFrame:
    """One eye-tracker sample."""

    t: float
    left_dir: np.ndarray
    right_dir: np.ndarray
    cyclopean_dir: np.ndarray
    left_pupil_mm: float
    right_pupil_mm: float
    left_openness: float
    right_openness: float
    label: int


class GazeDataset:
    """Frames from one or more sessions, stored as a dense feature matrix.

    `features` has one row per frame in FEATURE_COLUMNS order; sessions are
    contiguous runs of equal `session_ids` and strictly increasing in t.
    """

    def __init__(self, features, labels, session_ids, test_kind, validate=True):
        self.features = np.asarray(features, dtype=float)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.session_ids = np.asarray(session_ids)
        self.test_kind = test_kind
        if validate:
            self._validate()

    # -- invariants ----------------------------------------------------------

    def _validate(self):
        if self.features.ndim != 2 or self.features.shape[1] != N_FEATURES:
            raise LengthMismatch(
                f"feature matrix must be (n, {N_FEATURES}), got {self.features.shape}")
        n = len(self.features)
        if len(self.labels) != n or len(self.session_ids) != n:
            raise LengthMismatch("features, labels and session_ids must align")
        if self.test_kind not in TEST_KINDS:
            raise InvalidSpec(f"unknown test kind {self.test_kind!r}")
        if n == 0:
            return
        if not np.all(np.isfinite(self.features)):
            raise BadLabel("non-finite value in feature matrix")
        bad = ~np.isin(self.labels, (0, 1))
        if bad.any():
            raise BadLabel(f"labels must be 0 or 1, found {self.labels[bad][0]}")
        for name, sl in (("left", _LEFT), ("right", _RIGHT), ("cyclopean", _CYC)):
            norms = np.linalg.norm(self.features[:, sl], axis=1)
            dev = np.abs(norms - 1.0)
            if dev.max() > UNIT_NORM_TOL:
                i = int(dev.argmax())
                raise NonUnitDirection(
                    f"{name} direction at row {i} has norm {norms[i]:.6f}")
        if self.features[:, [_LPUPIL, _RPUPIL]].min() <= 0:
            raise BadLabel("pupil diameters must be positive")
        op = self.features[:, [_LOPEN, _ROPEN]]
        if op.min() < 0 or op.max() > 1:
            raise BadLabel("openness must lie in [0, 1]")
        # strictly increasing time within each contiguous session run
        same = self.session_ids[1:] == self.session_ids[:-1]
        dt = np.diff(self.features[:, _T])
        if np.any(dt[same] <= 0):
            i = int(np.nonzero(same & (dt <= 0))[0][0])
            raise NonMonotonicTime(
                f"session {self.session_ids[i]!r}: t does not increase at row {i + 1}")

    # -- accessors -----------------------------------------------------------

    def __len__(self):
        return len(self.features)

    @property
    def t(self):
        return self.features[:, _T]

    @property
    def left_dirs(self):
        return self.features[:, _LEFT]

    @property
    def right_dirs(self):
        return self.features[:, _RIGHT]

    @property
    def cyclopean_dirs(self):
        return self.features[:, _CYC]

    def eye_dirs(self, eye):
        """Direction block for eye in {'left', 'right', 'cyclopean'}."""
        sl = {"left": _LEFT, "right": _RIGHT, "cyclopean": _CYC}.get(eye)
        if sl is None:
            raise InvalidSpec(f"unknown eye channel {eye!r}")
        return self.features[:, sl]

    def class_counts(self):
        """(n_control, n_concussed), i.e. counts of labels 0 and 1."""
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def frame(self, i):
        row = self.features[i]
        return GazeFrame(
            t=float(row[_T]),
            left_dir=row[_LEFT].copy(),
            right_dir=row[_RIGHT].copy(),
            cyclopean_dir=row[_CYC].copy(),
            left_pupil_mm=float(row[_LPUPIL]),
            right_pupil_mm=float(row[_RPUPIL]),
            left_openness=float(row[_LOPEN]),
            right_openness=float(row[_ROPEN]),
            label=int(self.labels[i]),
        )

    def subset(self, indices):
        """New dataset from `indices`, kept in ascending order so per-session
        time ordering survives."""
        idx = np.sort(np.asarray(indices, dtype=np.int64))
        return GazeDataset(
            self.features[idx], self.labels[idx], self.session_ids[idx],
            self.test_kind, validate=False)

    @classmethod
    def concatenate(cls, parts):
        parts = list(parts)
        if not parts:
            raise EmptyDataset("nothing to concatenate")
        kind = parts[0].test_kind
        if any(p.test_kind != kind for p in parts):
            raise InvalidSpec("cannot concatenate datasets of different test kinds")
        return cls(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.session_ids for p in parts]),
            kind, validate=False)


# -- CSV wire format ---------------------------------------------------------

def write_csv(ds, path):
    """Serialise to the 16-column CSV wire format; floats use repr so a
    load round-trips bit-exactly."""
    out = [",".join(COLUMNS)]
    feats = ds.features
    for i in range(len(ds)):
        row = [str(ds.session_ids[i])]
        row.extend(repr(float(v)) for v in feats[i])
        row.append(str(int(ds.labels[i])))
        out.append(",".join(row))
    atomic_write_text(path, "\n".join(out) + "\n")


def load_csv(path, test_kind):
    """Parse and validate the CSV wire format.

    Directions whose norm deviates from 1 by more than 1e-3 are rejected
    (NonUnitDirection); smaller deviations are silently re-normalised.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: empty file") from None
        if header != COLUMNS:
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise MissingColumn(f"{path}: missing column(s) {missing}")
            raise MissingColumn(f"{path}: header must be exactly {COLUMNS}")
        sids, rows, labels = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(COLUMNS):
                raise MissingColumn(
                    f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(rec)}")
            sids.append(rec[0])
            try:
                rows.append([float(v) for v in rec[1:15]])
            except ValueError as e:
                raise BadLabel(f"{path}:{lineno}: {e}") from None
            lab = rec[15].strip()
            if lab not in ("0", "1"):
                raise BadLabel(f"{path}:{lineno}: label must be 0 or 1, got {lab!r}")
            labels.append(int(lab))
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    feats = np.array(rows, dtype=float)
    for name, sl in (("left", _LEFT), ("right", _RIGHT), ("cyclopean", _CYC)):
        block = feats[:, sl]
        norms = np.linalg.norm(block, axis=1)
        dev = np.abs(norms - 1.0)
        if dev.max() > CSV_NORM_TOL:
            i = int(dev.argmax())
            raise NonUnitDirection(
                f"{path}: row {i + 2}: {name} direction norm {norms[i]:.4f}")
        # re-normalise only rows that need it, so clean files round-trip
        # bit-exactly through repr()
        off = dev > UNIT_NORM_TOL
        if off.any():
            feats[np.nonzero(off)[0][:, None], np.arange(sl.start, sl.stop)] = (
                block[off] / norms[off, None])
    return GazeDataset(feats, np.array(labels), np.array(sids), test_kind)


# -- splitting ---------------------------------------------------------------

@dataclass
class SplitConfig:
    """Train/validation/test partition parameters.

    Fractions are of the whole dataset (test) and of the remaining pool
    (validation). `by_session` switches the shuffled unit from frames to
    whole sessions.
    """

    test_fraction: float = 0.2
    validation_fraction: float = 0.1
    seed: int = 0
    stratified: bool = True
    by_session: bool = False

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise InvalidSpec(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise InvalidSpec(
                f"validation_fraction must be in [0, 1), got {self.validation_fraction}")


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def split_sizes(n, test_fraction, validation_fraction):
    """(n_train, n_val, n_test) under round-half-up arithmetic."""
    n_test = _round_half_up(test_fraction * n)
    n_val = _round_half_up(validation_fraction * (n - n_test))
    return n - n_test - n_val, n_val, n_test


def _allocate_per_class(counts, total_take):
    """Largest-remainder allocation of total_take across classes, proportional
    to counts; ties favour the lower class index."""
    counts = np.asarray(counts, dtype=float)
    ideal = counts * (total_take / counts.sum()) if counts.sum() else counts * 0.0
    base = np.floor(ideal).astype(int)
    base = np.minimum(base, counts.astype(int))
    left = int(total_take - base.sum())
    if left > 0:
        remainders = ideal - base
        # stable sort descending by remainder; ties keep class order
        order = np.argsort(-remainders, kind="stable")
        for c in order:
            if left == 0:
                break
            if base[c] < counts[c]:
                base[c] += 1
                left -= 1
    return base


def split(ds, cfg=None):
    """Partition into (train, validation, test) GazeDatasets.

    Every frame lands in exactly one part. In stratified mode the per-class
    allocation uses largest remainders, so each class count is within one
    frame of the exact proportion.
    """
    cfg = cfg or SplitConfig()
    n = len(ds)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    if cfg.by_session:
        return _split_by_session(ds, cfg, rng)
    n_train, n_val, n_test = split_sizes(n, cfg.test_fraction, cfg.validation_fraction)
    if cfg.stratified:
        n0, n1 = ds.class_counts()
        if n0 == 0 or n1 == 0:
            raise SingleClassStratify("stratified split needs both classes present")
        take_test = _allocate_per_class((n0, n1), n_test)
        test_idx, pool_idx = [], []
        for c in (0, 1):
            perm = rng.permutation(np.nonzero(ds.labels == c)[0])
            test_idx.append(perm[: take_test[c]])
            pool_idx.append(perm[take_test[c]:])
        pool_counts = [len(p) for p in pool_idx]
        take_val = _allocate_per_class(pool_counts, n_val)
        val_idx = [pool_idx[c][: take_val[c]] for c in (0, 1)]
        train_idx = [pool_idx[c][take_val[c]:] for c in (0, 1)]
        test_idx = np.concatenate(test_idx)
        val_idx = np.concatenate(val_idx)
        train_idx = np.concatenate(train_idx)
    else:
        perm = rng.permutation(n)
        test_idx = perm[:n_test]
        val_idx = perm[n_test:n_test + n_val]
        train_idx = perm[n_test + n_val:]
    return ds.subset(train_idx), ds.subset(val_idx), ds.subset(test_idx)


def _split_by_session(ds, cfg, rng):
    # allocate whole sessions; a session's label is taken from its first frame
    sids, starts = np.unique(ds.session_ids, return_index=True)
    sess_labels = ds.labels[starts]
    n_sess = len(sids)
    nt_sess = _round_half_up(cfg.test_fraction * n_sess)
    nv_sess = _round_half_up(cfg.validation_fraction * (n_sess - nt_sess))
    if cfg.stratified:
        counts = [int(np.sum(sess_labels == 0)), int(np.sum(sess_labels == 1))]
        if counts[0] == 0 or counts[1] == 0:
            raise SingleClassStratify("stratified split needs both classes present")
        take_t = _allocate_per_class(counts, nt_sess)
        test_s, pool_s = [], []
        for c in (0, 1):
            perm = rng.permutation(sids[sess_labels == c])
            test_s.append(perm[: take_t[c]])
            pool_s.append(perm[take_t[c]:])
        take_v = _allocate_per_class([len(p) for p in pool_s], nv_sess)
        val_s = np.concatenate([pool_s[c][: take_v[c]] for c in (0, 1)])
        train_s = np.concatenate([pool_s[c][take_v[c]:] for c in (0, 1)])
        test_s = np.concatenate(test_s)
    else:
        perm = rng.permutation(sids)
        test_s = perm[:nt_sess]
        val_s = perm[nt_sess:nt_sess + nv_sess]
        train_s = perm[nt_sess + nv_sess:]
    def pick(chosen):
        return ds.subset(np.nonzero(np.isin(ds.session_ids, chosen))[0])
    return pick(train_s), pick(val_s), pick(test_s)


# -- class weighting ---------------------------------------------------------

@dataclass(frozen=True)
class ClassWeights:
    """Inverse-frequency class weights: w_c = N / (2 * N_c), so each class
    contributes the same total weight N/2."""

    control: float
    concussed: float

    def as_array(self):
        return np.array([self.control, self.concussed])

    def per_sample(self, labels):
        labels = np.asarray(labels)
        return np.where(labels == 1, self.concussed, self.control)


def class_weights(ds_or_labels):
    labels = ds_or_labels.labels if isinstance(ds_or_labels, GazeDataset) else np.asarray(ds_or_labels)
    n = len(labels)
    if n == 0:
        raise EmptyDataset("cannot weight an empty dataset")
    n1 = int(np.sum(labels == 1))
    n0 = n - n1
    if n0 == 0 or n1 == 0:
        raise SingleClass("class weighting needs both classes present")
    return ClassWeights(control=n / (2.0 * n0), concussed=n / (2.0 * n1))


def balanced_subset(ds, per_class, seed=0):
    """Exactly per_class frames of each label, sampled without replacement."""
    n0, n1 = ds.class_counts()
    if n0 < per_class or n1 < per_class:
        raise InsufficientClassSamples(
            f"need {per_class} per class, have control={n0} concussed={n1}")
    rng = np.random.default_rng(seed)
    picked = [rng.choice(np.nonzero(ds.labels == c)[0], size=per_class, replace=False)
              for c in (0, 1)]
    return ds.subset(np.concatenate(picked))
