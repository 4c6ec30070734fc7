"""L2-regularized weighted logistic regression.

Minimizes sum_i w_i * logloss(y_i, sigmoid(x_i.w + b)) + ||w||^2 / (2C)
with an unpenalized intercept, by damped Newton iterations.  Sample
weights are rescaled to mean 1 before optimization so that scaling all
weights by a common constant leaves the fit unchanged (the balanced
class weights already have mean 1, so this is a no-op on the default
path).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError

MAX_ITER = 1000
GRAD_TOL = 1e-8


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, C: float):
    """Loss value and gradient at theta = [w..., b]; used by the
    finite-difference gradient check as well as the solver."""
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # logloss(y, sigmoid(z)) == softplus(z) - y*z, stable for large |z|
    loss = float(np.sum(sample_weight * (np.logaddexp(0.0, z) - y * z)))
    loss += 0.5 / C * float(w @ w)
    r = sample_weight * (sigmoid(z) - y)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + w / C
    grad[-1] = r.sum()
    return loss, grad


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    converged: bool
    n_iter: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(np.asarray(X, dtype=float) @ self.weights + self.intercept)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=float), d["intercept"], d["converged"], d["n_iter"])


def fit_logistic(X: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, C: float = 1.0) -> LogisticModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(X).all():
        raise TrainingError("non-finite feature value")
    n, p = X.shape
    sw = np.asarray(sample_weight, dtype=float)
    sw = sw / sw.mean()

    theta = np.zeros(p + 1)
    loss, grad = objective(theta, X, y, sw, C)
    n_iter = 0
    converged = False
    for n_iter in range(1, MAX_ITER + 1):
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        w = theta[:-1]
        z = X @ w + theta[-1]
        prob = sigmoid(z)
        d = sw * prob * (1.0 - prob)
        H = np.empty((p + 1, p + 1))
        Xd = X * d[:, None]
        H[:p, :p] = X.T @ Xd + np.eye(p) / C
        H[:p, p] = Xd.sum(axis=0)
        H[p, :p] = H[:p, p]
        H[p, p] = d.sum()
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(H + 1e-10 * np.eye(p + 1), grad)
        # damped Newton: halve until the loss does not increase
        t = 1.0
        for _ in range(60):
            candidate = theta - t * step
            new_loss, new_grad = objective(candidate, X, y, sw, C)
            if new_loss <= loss + 1e-15:
                break
            t *= 0.5
        theta, loss, grad = candidate, new_loss, new_grad
    else:
        converged = bool(np.max(np.abs(grad)) < GRAD_TOL)

    return LogisticModel(weights=theta[:-1].copy(), intercept=float(theta[-1]), converged=converged, n_iter=n_iter)
