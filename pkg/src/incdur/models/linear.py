"""Linear least squares with ridge, and logistic regression via gradient
descent (converged at gradient norm < 1e-6 or 10,000 iterations)."""

from __future__ import annotations

import numpy as np

from .base import LinearParams, ModelError, TrainedModel, as_values, prepare_targets

GRAD_TOL = 1e-6
MAX_ITERS = 10_000


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


class LinearRegressor:
    def __init__(self, intercept, coefs):
        self.intercept = float(intercept)
        self.coefs = np.asarray(coefs, dtype=float)

    def predict_values(self, values):
        return self.intercept + values @ self.coefs

    def to_dict(self):
        return {
            "type": "linear-regressor",
            "intercept": self.intercept,
            "coefs": self.coefs.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return LinearRegressor(d["intercept"], d["coefs"])


class LogisticClassifier:
    """Binary or one-vs-rest multinomial logistic model."""

    def __init__(self, intercepts, coefs):
        self.intercepts = np.asarray(intercepts, dtype=float)  # (K,) or (1,)
        self.coefs = np.asarray(coefs, dtype=float)  # (K, m) or (1, m)

    def predict_proba_values(self, values):
        scores = _sigmoid(values @ self.coefs.T + self.intercepts)
        if scores.shape[1] == 1:
            p = scores[:, 0]
            return np.column_stack([1.0 - p, p])
        total = scores.sum(axis=1, keepdims=True)
        total[total == 0] = 1.0
        return scores / total

    def to_dict(self):
        return {
            "type": "logistic",
            "intercepts": self.intercepts.tolist(),
            "coefs": self.coefs.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return LogisticClassifier(d["intercepts"], d["coefs"])


def logistic_loss_grad(weights, values, y01, ridge):
    """Mean log-loss gradient with L2 on the non-intercept weights.

    ``weights`` is [intercept, coefs...]; exposed for finite-difference checks.
    """
    n = values.shape[0]
    z = weights[0] + values @ weights[1:]
    p = _sigmoid(z)
    resid = p - y01
    grad = np.empty_like(weights)
    grad[0] = resid.mean()
    grad[1:] = values.T @ resid / n + ridge * weights[1:]
    return grad


def logistic_loss(weights, values, y01, ridge):
    z = weights[0] + values @ weights[1:]
    # log(1 + exp(-m)) with m = z for y=1 and -z for y=0, stable form
    margins = np.where(y01 > 0.5, z, -z)
    loss = np.mean(np.logaddexp(0.0, -margins))
    return loss + 0.5 * ridge * float(weights[1:] @ weights[1:])


def _fit_logistic_binary(values, y01, ridge):
    n, m = values.shape
    aug = np.hstack([np.ones((n, 1)), values])
    smax = np.linalg.norm(aug, 2)
    step = 1.0 / (smax**2 / (4.0 * n) + ridge + 1e-12)
    weights = np.zeros(m + 1)
    for _ in range(MAX_ITERS):
        grad = logistic_loss_grad(weights, values, y01, ridge)
        if np.linalg.norm(grad) < GRAD_TOL:
            break
        weights = weights - step * grad
    return weights


def fit_linear(
    X,
    y,
    params: LinearParams | None = None,
    task: str = "regression",
    target_transform: str = "none",
) -> TrainedModel:
    params = params or LinearParams()
    values = as_values(X)
    y = np.asarray(y)
    if y.shape[0] != values.shape[0] or values.shape[0] < 2:
        raise ModelError("need |y| = rows(X) >= 2")
    targets, classes = prepare_targets(y, task, target_transform)

    if task == "regression":
        n, m = values.shape
        aug = np.hstack([np.ones((n, 1)), values])
        gram = aug.T @ aug
        if params.ridge > 0:
            penalty = np.eye(m + 1) * params.ridge
            penalty[0, 0] = 0.0  # intercept unpenalised
            gram = gram + penalty
        try:
            beta = np.linalg.solve(gram, aug.T @ targets)
        except np.linalg.LinAlgError:
            raise ModelError(
                "singular normal equations; use ridge > 0 for rank-deficient X"
            ) from None
        inner = LinearRegressor(beta[0], beta[1:])
    else:
        k = len(classes)
        if k == 2:
            w = _fit_logistic_binary(values, targets.astype(float), params.ridge)
            inner = LogisticClassifier([w[0]], [w[1:]])
        else:
            rows = [
                _fit_logistic_binary(
                    values, (targets == c).astype(float), params.ridge
                )
                for c in range(k)
            ]
            inner = LogisticClassifier(
                [w[0] for w in rows], [w[1:] for w in rows]
            )

    return TrainedModel(
        kind="linear",
        task=task,
        inner=inner,
        feature_names=getattr(X, "feature_names", None),
        target_transform=target_transform if task == "regression" else "none",
        classes=classes,
        params=params,
    )
