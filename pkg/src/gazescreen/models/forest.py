"""Random forest of CART trees: bootstrap rows, per-split random feature
subsets, majority vote."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidHyperParam
from .base import FeatureMatrix, FittedModel, register_model
from .tree import TreeParams, descend, grow_tree


@dataclass
class ForestParams:
    """max_features None means floor(sqrt(d)); max_samples None draws a
    full-size bootstrap."""

    n_estimators: int = 100
    max_features: int = None
    bootstrap: bool = True
    max_samples: int = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: int = None

    def __post_init__(self):
        if self.n_estimators < 1:
            raise InvalidHyperParam("n_estimators must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise InvalidHyperParam("max_features must be >= 1 when set")
        if self.max_samples is not None and self.max_samples < 1:
            raise InvalidHyperParam("max_samples must be >= 1 when set")


def _tree_rng(seed, index):
    # per-tree stream: SeedSequence keyed by (forest seed, tree index)
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


@register_model
class RandomForestModel(FittedModel):
    kind = "RF"
    threshold = 0.5  # decision_score is the fraction of trees voting 1

    def __init__(self, trees, n_features):
        super().__init__()
        self.trees = trees
        self.n_features = n_features

    def _score(self, X):
        votes = np.zeros(len(X))
        for nodes in self.trees:
            votes += descend(nodes, X) > 0.5
        return votes / len(self.trees)

    def _params_to_json(self):
        return {"trees": [{k: v.tolist() for k, v in t.items()} for t in self.trees]}

    def _apply_params(self, p):
        self.trees = []
        for t in p["trees"]:
            self.trees.append({
                "feature": np.asarray(t["feature"], dtype=np.int64),
                "threshold": np.asarray(t["threshold"], dtype=float),
                "left": np.asarray(t["left"], dtype=np.int64),
                "right": np.asarray(t["right"], dtype=np.int64),
                "p1": np.asarray(t["p1"], dtype=float),
                "node_weight": np.asarray(t["node_weight"], dtype=float),
            })


def fit_random_forest(fm: FeatureMatrix, hp: ForestParams = None, seed: int = 0):
    """Trees are fit sequentially from per-tree RNG streams derived from
    (seed, tree_index), so results do not depend on scheduling."""
    hp = hp or ForestParams()
    w = fm.normalized_weights()
    yf = fm.y.astype(float)
    m = hp.max_features if hp.max_features is not None else max(1, int(np.sqrt(fm.d)))
    m = min(m, fm.d)
    n_draw = hp.max_samples if hp.max_samples is not None else fm.n
    n_draw = min(n_draw, fm.n)
    tree_hp = TreeParams(min_samples_split=hp.min_samples_split,
                         min_samples_leaf=hp.min_samples_leaf,
                         max_depth=hp.max_depth)
    trees = []
    for i in range(hp.n_estimators):
        rng = _tree_rng(seed, i)
        if hp.bootstrap:
            idx = rng.integers(0, fm.n, size=n_draw)
        else:
            idx = np.arange(fm.n)[:n_draw]
        trees.append(grow_tree(fm.X[idx], yf[idx], w[idx], tree_hp,
                               rng=rng, max_features=m))
    model = RandomForestModel(trees, fm.d)
    model.meta = {"hyperparams": asdict(hp), "seed": seed}
    return model
