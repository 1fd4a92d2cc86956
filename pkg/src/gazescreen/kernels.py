"""RBF kernel helpers shared by the SVM, one-class SVM and GP classifier."""
from __future__ import annotations

import numpy as np

from .errors import InvalidHyperParam


def squared_distances(A, B):
    """Pairwise squared Euclidean distances, clipped at 0 so float
    cancellation never produces tiny negatives."""
    sq = (np.sum(A * A, axis=1)[:, None]
          + np.sum(B * B, axis=1)[None, :]
          - 2.0 * (A @ B.T))
    return np.maximum(sq, 0.0)


def rbf_kernel(A, B, gamma):
    return np.exp(-gamma * squared_distances(A, B))


def gamma_scale(X):
    """The 'scale' heuristic: 1 / (d * mean per-feature variance)."""
    X = np.asarray(X, dtype=float)
    v = float(np.mean(np.var(X, axis=0)))
    if v <= 0:
        v = 1.0  # constant data: fall back so the kernel stays defined
    return 1.0 / (X.shape[1] * v)


def resolve_gamma(gamma, X):
    if gamma == "scale":
        return gamma_scale(X)
    g = float(gamma)
    if g <= 0:
        raise InvalidHyperParam(f"gamma must be positive, got {gamma!r}")
    return g
