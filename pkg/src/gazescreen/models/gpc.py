"""Gaussian process classification with a logistic likelihood and the
Laplace approximation.

Mode finding uses the numerically stable Newton iteration on
B = I + W^1/2 K W^1/2; the log marginal likelihood and its gradients with
respect to the kernel hyperparameters (log length-scale, log amplitude)
include both the explicit and the implicit (mode-shift) terms, and the
hyperparameters are optimised by L-BFGS. Predictions use the probit-scaled
approximation of the logistic-Gaussian integral.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.special import expit

from ..errors import InvalidHyperParam, KernelNotPD, TrainingSizeExceeded
from ..kernels import squared_distances
from .base import FeatureMatrix, FittedModel, arr, register_model

_JITTER = 1e-8
_MAX_JITTER_TRIES = 3


@dataclass
class GpcParams:
    """theta0 entries are (log length-scale, log amplitude); None picks the
    length-scale from the data scale (sqrt of d * mean feature variance)
    and unit amplitude. max_iter_predict caps the Newton mode search."""

    max_iter_predict: int = 100
    newton_tol: float = 1e-8
    max_train: int = 2000
    optimizer_max_iter: int = 30
    theta0: tuple = None
    optimize_hyperparams: bool = True

    def __post_init__(self):
        if self.max_iter_predict < 1 or self.optimizer_max_iter < 0:
            raise InvalidHyperParam("iteration caps must be positive")
        if self.newton_tol <= 0:
            raise InvalidHyperParam("newton_tol must be positive")
        if self.max_train < 2:
            raise InvalidHyperParam("max_train must be >= 2")


def _chol_with_jitter(M):
    jitter = _JITTER
    for attempt in range(_MAX_JITTER_TRIES + 1):
        try:
            return np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            if attempt == _MAX_JITTER_TRIES:
                break
            M = M + jitter * np.eye(len(M))
            jitter *= 10.0
    raise KernelNotPD("kernel matrix not positive definite after jitter retries")


def _kernel_from_theta(sqdist, theta):
    ell = np.exp(theta[0])
    sf2 = np.exp(2.0 * theta[1])
    return sf2 * np.exp(-0.5 * sqdist / (ell * ell))


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def _posterior_mode(K, ypm, tol, cap):
    """Newton iteration for the Laplace mode (stable parameterisation).

    Returns (f_hat, a, pi, sqrt_W, L, log_lik); `a` solves f_hat = K a.
    Convergence is declared when the per-sample objective change drops
    below tol.
    """
    n = len(ypm)
    t = 0.5 * (ypm + 1.0)
    f = np.zeros(n)
    prev_obj = -np.inf
    a = np.zeros(n)
    for _ in range(cap):
        pi = expit(f)
        W = pi * (1.0 - pi)
        sw = np.sqrt(W)
        B = np.eye(n) + (sw[:, None] * K) * sw[None, :]
        L = _chol_with_jitter(B)
        grad_ll = t - pi
        b = W * f + grad_ll
        a = b - sw * cho_solve((L, True), sw * (K @ b))
        f = K @ a
        obj = -0.5 * (a @ f) + float(np.sum(_log_sigmoid(ypm * f)))
        if abs(obj - prev_obj) / n < tol:
            break
        prev_obj = obj
    pi = expit(f)
    sw = np.sqrt(pi * (1.0 - pi))
    B = np.eye(n) + (sw[:, None] * K) * sw[None, :]
    L = _chol_with_jitter(B)
    log_lik = float(np.sum(_log_sigmoid(ypm * f)))
    return f, a, pi, sw, L, log_lik


def gpc_lml_and_grad(theta, X, ypm, newton_tol=1e-10, newton_cap=100):
    """Laplace log marginal likelihood and its gradient wrt theta.

    The gradient includes the implicit term from the dependence of the
    mode on the kernel, via s2' s3.
    """
    theta = np.asarray(theta, dtype=float)
    sqdist = squared_distances(X, X)
    K = _kernel_from_theta(sqdist, theta)
    f, a, pi, sw, L, log_lik = _posterior_mode(K, ypm, newton_tol, newton_cap)
    lml = -0.5 * (a @ f) + log_lik - float(np.sum(np.log(np.diag(L))))

    t = 0.5 * (ypm + 1.0)
    grad_ll = t - pi
    R = sw[:, None] * cho_solve((L, True), np.diag(sw))
    C = solve_triangular(L, sw[:, None] * K, lower=True)
    d3 = pi * (1.0 - pi) * (2.0 * pi - 1.0)  # third derivative of log lik
    # dZ/df_hat = +0.5 * posterior variance * d3 (the -0.5 d(logdet) and the
    # dW/df = -d3 signs cancel)
    s2 = 0.5 * (np.diag(K) - np.sum(C * C, axis=0)) * d3

    ell = np.exp(theta[0])
    dKs = (K * (sqdist / (ell * ell)), 2.0 * K)
    grad = np.empty(2)
    for j, dK in enumerate(dKs):
        s1 = 0.5 * (a @ (dK @ a)) - 0.5 * float(np.sum(R * dK))
        bvec = dK @ grad_ll
        s3 = bvec - K @ (R @ bvec)
        grad[j] = s1 + s2 @ s3
    return float(lml), grad


@register_model
class GpcModel(FittedModel):
    kind = "GPC"
    threshold = 0.0  # decision_score is the probit-scaled latent mean

    def __init__(self, X_train, y_train, f_hat, theta, converged=True):
        super().__init__()
        self.X_train = X_train
        self.y_train = y_train
        self.f_hat = f_hat
        self.theta = theta
        self.converged = converged
        self.n_features = X_train.shape[1]
        self._finalize()

    def _finalize(self):
        ypm = 2.0 * self.y_train - 1.0
        pi = expit(self.f_hat)
        self._grad_ll = 0.5 * (ypm + 1.0) - pi
        self._sw = np.sqrt(pi * (1.0 - pi))
        K = _kernel_from_theta(squared_distances(self.X_train, self.X_train), self.theta)
        n = len(K)
        B = np.eye(n) + (self._sw[:, None] * K) * self._sw[None, :]
        self._L = _chol_with_jitter(B)
        self._sf2 = float(np.exp(2.0 * self.theta[1]))

    def latent(self, X, chunk=2048):
        """(mean, variance) of the latent function at X."""
        X = self._check_X(X)
        mean = np.empty(len(X))
        var = np.empty(len(X))
        for lo in range(0, len(X), chunk):
            hi = min(lo + chunk, len(X))
            ks = _kernel_from_theta(squared_distances(X[lo:hi], self.X_train), self.theta)
            mean[lo:hi] = ks @ self._grad_ll
            v = solve_triangular(self._L, (self._sw[:, None] * ks.T), lower=True)
            var[lo:hi] = np.maximum(self._sf2 - np.sum(v * v, axis=0), 0.0)
        return mean, var

    def _score(self, X):
        mean, var = self.latent(X)
        return mean / np.sqrt(1.0 + np.pi * var / 8.0)

    def predict_proba(self, X):
        return expit(self.decision_score(X))

    def _params_to_json(self):
        return {
            "X_train": self.X_train.tolist(),
            "y_train": self.y_train.tolist(),
            "f_hat": self.f_hat.tolist(),
            "theta": list(self.theta),
            "converged": self.converged,
        }

    def _apply_params(self, p):
        self.X_train = arr(p["X_train"])
        self.y_train = np.asarray(p["y_train"], dtype=np.int64)
        self.f_hat = arr(p["f_hat"])
        self.theta = np.asarray(p["theta"], dtype=float)
        self.converged = bool(p.get("converged", True))
        self.n_features = self.X_train.shape[1]
        self._finalize()


def default_theta0(X):
    v = float(np.mean(np.var(X, axis=0)))
    if v <= 0:
        v = 1.0
    ell0 = np.sqrt(X.shape[1] * v)
    return np.array([np.log(ell0), 0.0])


def fit_gpc(fm: FeatureMatrix, hp: GpcParams = None, seed: int = 0):
    """Mode-find at theta0, optionally optimise theta by L-BFGS on the
    marginal likelihood, then refit the mode at the optimum.

    Dense n x n algebra: refuses more than hp.max_train rows; callers are
    expected to subsample (the pipeline does, with a documented cap).
    """
    hp = hp or GpcParams()
    fm.require_both_classes()
    if fm.n > hp.max_train:
        raise TrainingSizeExceeded(
            f"GPC dense solve capped at {hp.max_train} rows, got {fm.n}")
    ypm = fm.signed_labels()
    theta = np.asarray(hp.theta0, dtype=float) if hp.theta0 is not None else default_theta0(fm.X)
    converged = True
    if hp.optimize_hyperparams and hp.optimizer_max_iter > 0:
        bounds = [(theta[0] - np.log(1e3), theta[0] + np.log(1e3)),
                  (np.log(1e-2), np.log(1e2))]

        def objective(th):
            lml, g = gpc_lml_and_grad(th, fm.X, ypm,
                                      newton_tol=hp.newton_tol,
                                      newton_cap=hp.max_iter_predict)
            return -lml, -g

        res = minimize(objective, theta, method="L-BFGS-B", jac=True,
                       bounds=bounds, options={"maxiter": hp.optimizer_max_iter})
        theta = res.x
        converged = bool(res.success) or res.status == 1  # 1: hit maxiter

    sqdist = squared_distances(fm.X, fm.X)
    K = _kernel_from_theta(sqdist, theta)
    f_hat, _, _, _, _, _ = _posterior_mode(K, ypm, hp.newton_tol, hp.max_iter_predict)
    model = GpcModel(fm.X.copy(), fm.y.copy(), f_hat, np.asarray(theta, float), converged)
    model.meta = {"hyperparams": {**asdict(hp), "theta0": None if hp.theta0 is None else list(hp.theta0)},
                  "seed": seed, "theta": [float(v) for v in theta]}
    return model
