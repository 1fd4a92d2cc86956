"""Soft-margin RBF SVC trained by sequential minimal optimisation.

The dual  min 1/2 a'Qa - e'a  s.t. y'a = 0, 0 <= a_i <= C_i  is solved by
repeatedly optimising the maximal violating pair (first-order working-set
selection) with the exact two-variable update, maintaining the full
gradient so selection is O(n) per step. Per-sample box bounds C_i carry
class weighting. Kernel rows are computed on demand and kept in a bounded
FIFO cache.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidHyperParam
from ..kernels import rbf_kernel, resolve_gamma
from .base import FeatureMatrix, FittedModel, arr, register_model

_TAU = 1e-12


@dataclass
class SvcParams:
    C: float = 1.0
    gamma: object = "scale"
    tol: float = 1e-3
    max_iter: int = 200_000
    cache_rows: int = 512

    def __post_init__(self):
        if self.C <= 0:
            raise InvalidHyperParam("C must be positive")
        if self.tol <= 0:
            raise InvalidHyperParam("tol must be positive")
        if self.max_iter < 1:
            raise InvalidHyperParam("max_iter must be >= 1")


class _RowCache:
    def __init__(self, X, gamma, capacity):
        self.X = X
        self.gamma = gamma
        self.capacity = capacity
        self.rows = OrderedDict()

    def get(self, i):
        row = self.rows.get(i)
        if row is None:
            row = rbf_kernel(self.X[i:i + 1], self.X, self.gamma)[0]
            if len(self.rows) >= self.capacity:
                self.rows.popitem(last=False)
            self.rows[i] = row
        return row


@register_model
class SvcRbfModel(FittedModel):
    kind = "SVC"
    threshold = 0.0

    def __init__(self, support_X, dual_coef, intercept, gamma, converged=True):
        super().__init__()
        self.support_X = support_X
        self.dual_coef = dual_coef  # alpha_i * y_i for support vectors
        self.intercept = intercept
        self.gamma = gamma
        self.converged = converged
        self.n_features = support_X.shape[1]

    def _score(self, X, chunk=4096):
        out = np.empty(len(X))
        for lo in range(0, len(X), chunk):
            hi = min(lo + chunk, len(X))
            out[lo:hi] = rbf_kernel(X[lo:hi], self.support_X, self.gamma) @ self.dual_coef
        return out + self.intercept

    def _params_to_json(self):
        return {
            "support_X": self.support_X.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "intercept": self.intercept,
            "gamma": self.gamma,
            "converged": self.converged,
        }

    def _apply_params(self, p):
        self.support_X = arr(p["support_X"])
        self.dual_coef = arr(p["dual_coef"])
        self.intercept = float(p["intercept"])
        self.gamma = float(p["gamma"])
        self.converged = bool(p["converged"])
        self.n_features = self.support_X.shape[1]


def fit_svc_rbf(fm: FeatureMatrix, hp: SvcParams = None, seed: int = 0):
    """SMO is deterministic (no randomness in selection); `seed` is recorded
    for interface uniformity only."""
    hp = hp or SvcParams()
    fm.require_both_classes()
    X = fm.X
    y = fm.signed_labels()
    n = fm.n
    C = hp.C * fm.normalized_weights()
    gamma = resolve_gamma(hp.gamma, X)
    cache = _RowCache(X, gamma, hp.cache_rows)

    alpha = np.zeros(n)
    grad = -np.ones(n)  # G = Q alpha - e
    converged = False
    for _ in range(hp.max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        up_idx = np.nonzero(up)[0]
        low_idx = np.nonzero(low)[0]
        if up_idx.size == 0 or low_idx.size == 0:
            converged = True
            break
        i = up_idx[np.argmax(yg[up_idx])]
        j = low_idx[np.argmin(yg[low_idx])]
        if yg[i] - yg[j] <= hp.tol:
            converged = True
            break
        Ki = cache.get(i)
        Kj = cache.get(j)
        Qi = y[i] * (y * Ki)
        Qj = y[j] * (y * Kj)
        old_i, old_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = max(Qi[i] + Qj[j] + 2.0 * Qi[j], _TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > C[i] - C[j]:
                if ai > C[i]:
                    ai = C[i]
                    aj = C[i] - diff
            else:
                if aj > C[j]:
                    aj = C[j]
                    ai = C[j] + diff
        else:
            quad = max(Qi[i] + Qj[j] - 2.0 * Qi[j], _TAU)
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C[i]:
                if ai > C[i]:
                    ai = C[i]
                    aj = total - C[i]
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > C[j]:
                if aj > C[j]:
                    aj = C[j]
                    ai = total - C[j]
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total
        alpha[i], alpha[j] = ai, aj
        grad += Qi * (ai - old_i) + Qj * (aj - old_j)

    # intercept from free vectors, else midpoint of the final KKT interval
    yg = -y * grad
    free = (alpha > 1e-8 * C) & (alpha < C * (1.0 - 1e-8))
    if free.any():
        b = float(np.mean(yg[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        b = float(0.5 * (hi + lo))

    sv = alpha > 1e-12
    model = SvcRbfModel(X[sv].copy(), (alpha * y)[sv], b, gamma, converged)
    model.meta = {"hyperparams": {**asdict(hp), "gamma": str(hp.gamma)},
                  "seed": seed, "gamma_value": gamma,
                  "n_support": int(sv.sum()), "converged": converged}
    return model
