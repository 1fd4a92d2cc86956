"""Binary screening metrics: confusion counts, derived rates, AUC, ROC,
and the two-way report table (models x metrics).

Positive class is 1 (concussed). Metrics whose denominator is empty are
reported as NaN together with a reason string instead of a silent 0.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, MissingColumn, NonBinaryLabel, SingleClass

METRIC_ORDER = ["Accuracy", "Sensitivity", "Specificity", "Precision", "F1-score", "AUC"]

# report column order; extra model names are appended after these
MODEL_DISPLAY_ORDER = [
    "Random Forest", "AdaBoost", "Gaussian Process Classifier", "Decision Tree",
    "Naive Bayes", "SVM", "Logistic Regression", "Perceptron",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def _check_binary(arr, what):
    arr = np.asarray(arr)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise NonBinaryLabel(f"{what} must be 0/1")
    return arr.astype(np.int64)


def confusion_matrix(y_true, y_pred):
    y_true = _check_binary(y_true, "y_true")
    y_pred = _check_binary(y_pred, "y_pred")
    if len(y_true) != len(y_pred):
        raise LengthMismatch("y_true and y_pred differ in length")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass
class MetricSet:
    """The six report metrics; NaN entries carry a reason in `undefined`."""

    accuracy: float
    sensitivity: float
    specificity: float
    precision: float
    f1: float
    auc: float
    auc_from_labels: bool = False
    undefined: dict = field(default_factory=dict)

    def by_name(self):
        return {
            "Accuracy": self.accuracy,
            "Sensitivity": self.sensitivity,
            "Specificity": self.specificity,
            "Precision": self.precision,
            "F1-score": self.f1,
            "AUC": self.auc,
        }


def _midrank(values):
    """Average ranks (1-based) with ties sharing their midrank.

    Midranks of integer-position groups are dyadic rationals, so the AUC
    computed from them is bit-identical to pairwise counting with 1/2 ties.
    """
    order = np.argsort(values, kind="mergesort")
    sorted_v = values[order]
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        # mean of integer ranks i+1 .. j+1 (exact: 0.5 * int)
        ranks[order[i:j + 1]] = 0.5 * ((i + 1) + (j + 1))
        i = j + 1
    return ranks


def auc_score(y_true, scores):
    """Rank-based AUC (Mann-Whitney with ties counted half)."""
    y_true = _check_binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=float)
    if len(y_true) != len(scores):
        raise LengthMismatch("labels and scores differ in length")
    n1 = int(np.sum(y_true == 1))
    n0 = len(y_true) - n1
    if n0 == 0 or n1 == 0:
        raise SingleClass("AUC needs both classes present")
    ranks = _midrank(scores)
    pos_rank_sum = ranks[y_true == 1].sum()
    return (pos_rank_sum - 0.5 * n1 * (n1 + 1)) / (n1 * n0)


def roc_curve(y_true, scores):
    """(fpr, tpr, thresholds) anchored at (0,0) and (1,1), one point per
    distinct score, thresholds descending."""
    y_true = _check_binary(y_true, "y_true")
    scores = np.asarray(scores, dtype=float)
    n1 = int(np.sum(y_true == 1))
    n0 = len(y_true) - n1
    if n0 == 0 or n1 == 0:
        raise SingleClass("ROC needs both classes present")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = y_true[order]
    distinct = np.nonzero(np.diff(s))[0]
    cut = np.concatenate([distinct, [len(s) - 1]])
    tps = np.cumsum(y)[cut]
    fps = np.cumsum(1 - y)[cut]
    tpr = np.concatenate([[0.0], tps / n1])
    fpr = np.concatenate([[0.0], fps / n0])
    thresholds = np.concatenate([[np.inf], s[cut]])
    return fpr, tpr, thresholds


def roc_auc_trapezoid(fpr, tpr):
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    return float(np.sum(np.diff(fpr) * 0.5 * (tpr[1:] + tpr[:-1])))


def compute_metrics(cm, y_true=None, scores=None):
    """MetricSet from a confusion matrix, with rank AUC when scores are given.

    Without scores, AUC falls back to balanced accuracy ((sens+spec)/2) and
    is flagged via `auc_from_labels`.
    """
    undefined = {}

    def rate(num, den, name, reason):
        if den == 0:
            undefined[name] = reason
            return float("nan")
        return num / den

    total = cm.total
    acc = rate(cm.tp + cm.tn, total, "accuracy", "no samples")
    sens = rate(cm.tp, cm.tp + cm.fn, "sensitivity", "no positive samples (tp+fn == 0)")
    spec = rate(cm.tn, cm.tn + cm.fp, "specificity", "no negative samples (tn+fp == 0)")
    prec = rate(cm.tp, cm.tp + cm.fp, "precision", "no positive predictions (tp+fp == 0)")
    if "sensitivity" in undefined or "precision" in undefined:
        undefined["f1"] = "precision or sensitivity undefined"
        f1 = float("nan")
    elif prec + sens == 0:
        f1 = 0.0
    else:
        f1 = 2 * prec * sens / (prec + sens)
    auc_from_labels = False
    if scores is not None:
        if y_true is None:
            raise LengthMismatch("scores were given without y_true")
        try:
            auc = auc_score(y_true, scores)
        except SingleClass:
            undefined["auc"] = "only one class present"
            auc = float("nan")
    else:
        auc_from_labels = True
        if "sensitivity" in undefined or "specificity" in undefined:
            undefined["auc"] = "sensitivity or specificity undefined"
            auc = float("nan")
        else:
            auc = 0.5 * (sens + spec)
    return MetricSet(accuracy=acc, sensitivity=sens, specificity=spec,
                     precision=prec, f1=f1, auc=auc,
                     auc_from_labels=auc_from_labels, undefined=undefined)


def evaluate_predictions(y_true, y_pred, scores=None):
    return compute_metrics(confusion_matrix(y_true, y_pred), y_true=y_true, scores=scores)


# -- report rendering ---------------------------------------------------------

def _fmt_pct(v):
    return "n/a" if np.isnan(v) else f"{100.0 * v:.1f}"


def _ordered_models(per_model):
    names = [m for m in MODEL_DISPLAY_ORDER if m in per_model]
    names += [m for m in per_model if m not in MODEL_DISPLAY_ORDER]
    return names


def render_report_text(per_model, title):
    """Fixed-width table: metric rows in report order, one column per model."""
    names = _ordered_models(per_model)
    width = max([len(m) for m in METRIC_ORDER] + [10])
    cols = [max(len(n), 5) for n in names]
    lines = [title, ""]
    header = " " * width + "  " + "  ".join(n.rjust(c) for n, c in zip(names, cols))
    lines.append(header)
    lines.append("-" * len(header))
    for metric in METRIC_ORDER:
        cells = [_fmt_pct(per_model[n].by_name()[metric]).rjust(c)
                 for n, c in zip(names, cols)]
        lines.append(metric.ljust(width) + "  " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def render_report_csv(per_model):
    """Long-form CSV `metric,model,value_percent`; undefined cells are empty."""
    buf = io.StringIO()
    buf.write("metric,model,value_percent\n")
    for metric in METRIC_ORDER:
        for name in _ordered_models(per_model):
            v = per_model[name].by_name()[metric]
            cell = "" if np.isnan(v) else f"{100.0 * v:.1f}"
            buf.write(f"{metric},{name},{cell}\n")
    return buf.getvalue()


def parse_report_csv(text):
    """Inverse of render_report_csv: {model: {metric: fraction or nan}}."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "metric,model,value_percent":
        raise MissingColumn("report CSV must start with metric,model,value_percent")
    out = {}
    for ln in lines[1:]:
        metric, model, cell = ln.split(",")
        out.setdefault(model, {})[metric] = float(cell) / 100.0 if cell else float("nan")
    return out
