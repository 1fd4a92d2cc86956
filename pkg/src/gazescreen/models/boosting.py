"""Discrete AdaBoost over depth-limited decision stumps.

Each round fits a stump to the current sample distribution, weighs it by
alpha_m = learning_rate * ln((1 - eps_m) / eps_m), and multiplies the
weights of misclassified samples by exp(alpha_m) before renormalising.
A perfect stump (eps == 0) is clamped to 1e-10 and stops boosting early;
a stump no better than chance (eps >= 0.5) is discarded and also stops.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidHyperParam
from .base import FeatureMatrix, FittedModel, arr, register_model
from .tree import TreeParams, descend, grow_tree

_EPS_FLOOR = 1e-10


@dataclass
class AdaBoostParams:
    n_estimators: int = 50
    learning_rate: float = 1.0
    base_max_depth: int = 1

    def __post_init__(self):
        if self.n_estimators < 1:
            raise InvalidHyperParam("n_estimators must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidHyperParam("learning_rate must be positive")
        if self.base_max_depth < 1:
            raise InvalidHyperParam("base_max_depth must be >= 1")


@register_model
class AdaBoostModel(FittedModel):
    kind = "ADA"
    threshold = 0.0

    def __init__(self, stumps, alphas, n_features):
        super().__init__()
        self.stumps = stumps
        self.alphas = alphas
        self.n_features = n_features

    def _score(self, X):
        """Sum of alpha_m * h_m(x) with stump outputs mapped to +-1."""
        score = np.zeros(len(X))
        for nodes, a in zip(self.stumps, self.alphas):
            score += a * np.where(descend(nodes, X) > 0.5, 1.0, -1.0)
        return score

    def _params_to_json(self):
        return {
            "alphas": list(self.alphas),
            "stumps": [{k: v.tolist() for k, v in s.items()} for s in self.stumps],
        }

    def _apply_params(self, p):
        self.alphas = [float(a) for a in p["alphas"]]
        self.stumps = []
        for s in p["stumps"]:
            self.stumps.append({
                "feature": np.asarray(s["feature"], dtype=np.int64),
                "threshold": arr(s["threshold"]),
                "left": np.asarray(s["left"], dtype=np.int64),
                "right": np.asarray(s["right"], dtype=np.int64),
                "p1": arr(s["p1"]),
                "node_weight": arr(s["node_weight"]),
            })


def fit_adaboost(fm: FeatureMatrix, hp: AdaBoostParams = None, seed: int = 0):
    hp = hp or AdaBoostParams()
    fm.require_both_classes()
    X = fm.X
    y = fm.y.astype(float)
    dist = fm.normalized_weights()
    dist = dist / dist.sum()
    stump_hp = TreeParams(max_depth=hp.base_max_depth)
    stumps, alphas = [], []
    for _ in range(hp.n_estimators):
        nodes = grow_tree(X, y, dist, stump_hp)
        pred = descend(nodes, X) > 0.5
        mis = pred != fm.y.astype(bool)
        eps = float(dist[mis].sum())
        if eps >= 0.5:
            break
        alpha = hp.learning_rate * np.log((1.0 - max(eps, _EPS_FLOOR)) / max(eps, _EPS_FLOOR))
        stumps.append(nodes)
        alphas.append(float(alpha))
        if eps <= 0.0:
            break
        dist = dist * np.exp(alpha * mis)
        dist = dist / dist.sum()
    if not stumps:
        # every stump was at-chance; fall back to the majority-class constant
        nodes = grow_tree(X, y, fm.normalized_weights(),
                          TreeParams(min_samples_split=len(X) + 1))
        stumps, alphas = [nodes], [0.0]
    model = AdaBoostModel(stumps, alphas, fm.d)
    model.meta = {"hyperparams": asdict(hp), "seed": seed,
                  "n_rounds": len(stumps)}
    return model
