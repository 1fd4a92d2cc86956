"""CART decision tree: exhaustive gini split search over midpoint
thresholds, with sample weights flowing through the impurity.

Tie-breaking is deterministic: among equal-gini splits the lowest feature
index wins, then the lowest threshold; leaf majorities resolve toward
class 0. Nodes are stored as flat arrays (feature == -1 marks a leaf), so
prediction is a vectorised level-by-level descent and serialisation is a
plain dict of lists.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyNode, InvalidHyperParam
from .base import FeatureMatrix, FittedModel, arr, register_model


def gini_impurity(labels, weights=None):
    """1 - sum of squared class proportions (weighted when weights given)."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise EmptyNode("gini impurity of an empty node is undefined")
    if weights is None:
        weights = np.ones(labels.size)
    total = weights.sum()
    p1 = weights[labels == 1].sum() / total
    p0 = 1.0 - p1
    return 1.0 - (p0 * p0 + p1 * p1)


@dataclass
class TreeParams:
    criterion: str = "gini"
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: int = None

    def __post_init__(self):
        if self.criterion != "gini":
            raise InvalidHyperParam(f"unsupported criterion {self.criterion!r}")
        if self.min_samples_split < 2:
            raise InvalidHyperParam("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise InvalidHyperParam("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidHyperParam("max_depth must be >= 1 when set")


def _best_split(Xn, yn, wn, feature_ids, min_leaf):
    """Lowest weighted-child-gini split over the given features.

    Returns (score, feature, threshold) or None when no boundary between
    distinct values satisfies the leaf minimum.
    """
    n = len(yn)
    total_w = wn.sum()
    total_w1 = wn @ yn
    best_score = np.inf
    best = None
    for f in feature_ids:
        x = Xn[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        ws = wn[order]
        w1s = ws * yn[order]
        cw = np.cumsum(ws)
        cw1 = np.cumsum(w1s)
        pos = np.nonzero(xs[1:] > xs[:-1])[0]  # boundary after position i
        if min_leaf > 1:
            pos = pos[(pos + 1 >= min_leaf) & (n - 1 - pos >= min_leaf)]
        if pos.size == 0:
            continue
        wl = cw[pos]
        wl1 = cw1[pos]
        wr = total_w - wl
        wr1 = total_w1 - wl1
        gini_l = 1.0 - ((wl1 / wl) ** 2 + ((wl - wl1) / wl) ** 2)
        gini_r = 1.0 - ((wr1 / wr) ** 2 + ((wr - wr1) / wr) ** 2)
        score = (wl * gini_l + wr * gini_r) / total_w
        k = int(np.argmin(score))  # first minimum -> lowest threshold
        if score[k] < best_score:
            best_score = float(score[k])
            thr = 0.5 * (xs[pos[k]] + xs[pos[k] + 1])
            if thr >= xs[pos[k] + 1]:
                # adjacent floats round the midpoint up; fall back to the
                # lower value so `x <= thr` still separates the boundary
                thr = xs[pos[k]]
            best = (best_score, int(f), thr)
    return best


def grow_tree(X, y, w, hp, rng=None, max_features=None):
    """Grow flat node arrays; when max_features is set, each split draws
    that many candidate features from rng (ascending order, so tie-breaks
    stay index-based)."""
    d = X.shape[1]
    feature, threshold, left, right, p1, node_w = [], [], [], [], [], []
    # stack of (row_indices, depth, parent_slot, is_left)
    stack = [(np.arange(len(y)), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        slot = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = slot
            else:
                right[parent] = slot
        yn = y[idx]
        wn = w[idx]
        wsum = wn.sum()
        frac1 = (wn @ yn) / wsum
        pure = yn.min() == yn.max()
        at_depth = hp.max_depth is not None and depth >= hp.max_depth
        choice = None
        if not pure and not at_depth and len(idx) >= hp.min_samples_split:
            if max_features is not None and max_features < d:
                feats = np.sort(rng.choice(d, size=max_features, replace=False))
            else:
                feats = np.arange(d)
            choice = _best_split(X[idx], yn, wn, feats, hp.min_samples_leaf)
        if choice is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
        else:
            _, f, thr = choice
            go_left = X[idx, f] <= thr
            feature.append(f)
            threshold.append(thr)
            left.append(-1)
            right.append(-1)
            # push right first so the left child is materialised next
            stack.append((idx[~go_left], depth + 1, slot, False))
            stack.append((idx[go_left], depth + 1, slot, True))
        p1.append(frac1)
        node_w.append(wsum)
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "p1": np.array(p1),
        "node_weight": np.array(node_w),
    }


def descend(nodes, X):
    """Vectorised root-to-leaf routing; returns the weighted class-1
    fraction at each row's leaf."""
    pos = np.zeros(len(X), dtype=np.int64)
    feature = nodes["feature"]
    threshold = nodes["threshold"]
    left = nodes["left"]
    right = nodes["right"]
    while True:
        f = feature[pos]
        active = f >= 0
        if not active.any():
            break
        rows = np.nonzero(active)[0]
        fv = X[rows, f[rows]]
        go_left = fv <= threshold[pos[rows]]
        pos[rows] = np.where(go_left, left[pos[rows]], right[pos[rows]])
    return nodes["p1"][pos]


@register_model
class DecisionTreeModel(FittedModel):
    kind = "DT"
    threshold = 0.5  # decision_score is the leaf class-1 fraction

    def __init__(self, nodes, n_features):
        super().__init__()
        self.nodes = nodes
        self.n_features = n_features

    @property
    def n_nodes(self):
        return len(self.nodes["feature"])

    @property
    def root_split(self):
        """(feature, threshold) of the root, or None for a leaf-only tree."""
        if self.nodes["feature"][0] < 0:
            return None
        return int(self.nodes["feature"][0]), float(self.nodes["threshold"][0])

    def _score(self, X):
        return descend(self.nodes, X)

    def _params_to_json(self):
        return {k: v.tolist() for k, v in self.nodes.items()}

    def _apply_params(self, p):
        self.nodes = {
            "feature": np.asarray(p["feature"], dtype=np.int64),
            "threshold": arr(p["threshold"]),
            "left": np.asarray(p["left"], dtype=np.int64),
            "right": np.asarray(p["right"], dtype=np.int64),
            "p1": arr(p["p1"]),
            "node_weight": arr(p["node_weight"]),
        }


def fit_decision_tree(fm: FeatureMatrix, hp: TreeParams = None):
    hp = hp or TreeParams()
    w = fm.normalized_weights()
    nodes = grow_tree(fm.X, fm.y.astype(float), w, hp)
    model = DecisionTreeModel(nodes, fm.d)
    model.meta = {"hyperparams": asdict(hp)}
    return model
