"""Gradient boosting: first-order residual fitting and a second-order
regularised variant (leaf weight -G/(H+lambda), gamma-thresholded split gain),
with optional gradient-based one-side sampling (GOSS)."""

from __future__ import annotations

import numpy as np

from .base import BoostParams, ModelError, TrainedModel, as_values, prepare_targets
from .tree import (
    Node,
    grow_mse_tree,
    grow_second_order_tree,
    predict_tree,
)

VARIANTS = ("first-order", "second-order-regularised")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def _remap_features(node: Node, cols):
    if node.is_leaf:
        return
    node.feature = int(cols[node.feature])
    _remap_features(node.left, cols)
    _remap_features(node.right, cols)


def _select_rows(grad, params: BoostParams, rng):
    """Row selection for one round: GOSS or plain subsampling.

    Returns (row indices, gradient scale per selected row).
    """
    n = grad.shape[0]
    if params.goss is not None:
        a, b = params.goss
        order = np.argsort(-np.abs(grad), kind="mergesort")
        n_top = int(a * n)
        n_rest = int(b * n)
        top = order[:n_top]
        rest = order[n_top:]
        sampled = (
            rng.choice(rest, size=min(n_rest, rest.shape[0]), replace=False)
            if rest.shape[0]
            else rest
        )
        rows = np.sort(np.concatenate([top, sampled]))
        scale = np.ones(rows.shape[0])
        scale[np.isin(rows, sampled)] = (1.0 - a) / b
        return rows, scale
    if params.subsample < 1.0:
        m = max(1, int(params.subsample * n))
        rows = np.sort(rng.permutation(n)[:m])
        return rows, np.ones(rows.shape[0])
    return np.arange(n), np.ones(n)


def _select_cols(m, params: BoostParams, rng):
    if params.colsample >= 1.0:
        return np.arange(m)
    k = max(1, int(round(params.colsample * m)))
    return np.sort(rng.choice(m, size=k, replace=False))


def _fit_round(values, grad, hess, params, variant, rng):
    """Grow one tree on the current pseudo-targets; returns a global-index tree."""
    rows, scale = _select_rows(grad, params, rng)
    cols = _select_cols(values.shape[1], params, rng)
    sub = values[np.ix_(rows, cols)]
    if variant == "first-order":
        # fitting a regression tree to (scaled) residuals
        tree = grow_mse_tree(
            sub, -grad[rows] * scale, params.max_depth, params.min_samples_leaf
        )
    else:
        tree = grow_second_order_tree(
            sub,
            grad[rows] * scale,
            hess[rows] * scale,
            params.max_depth,
            params.reg_lambda,
            params.gamma,
            params.min_samples_leaf,
            params.min_child_weight,
        )
    if cols.shape[0] < values.shape[1]:
        _remap_features(tree, cols)
    return tree


class _Booster:
    """A trained additive stage list: prediction = base + lr * sum(trees)."""

    def __init__(self, base_score, trees, learning_rate):
        self.base_score = float(base_score)
        self.trees = list(trees)
        self.learning_rate = float(learning_rate)

    def score_values(self, values):
        score = np.full(values.shape[0], self.base_score)
        for tree in self.trees:
            score += self.learning_rate * predict_tree(tree, values)
        return score

    def staged_scores(self, values):
        """Cumulative raw scores after each round (round count + 1 entries)."""
        score = np.full(values.shape[0], self.base_score)
        stages = [score.copy()]
        for tree in self.trees:
            score = score + self.learning_rate * predict_tree(tree, values)
            stages.append(score.copy())
        return stages

    def to_dict(self):
        return {
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "trees": [t.to_dict() for t in self.trees],
        }

    @staticmethod
    def from_dict(d):
        return _Booster(
            d["base_score"],
            [Node.from_dict(t) for t in d["trees"]],
            d["learning_rate"],
        )


class BoostRegressor:
    def __init__(self, booster: _Booster):
        self.booster = booster

    def predict_values(self, values):
        return self.booster.score_values(values)

    def staged_predict_values(self, values):
        return self.booster.staged_scores(values)

    def to_dict(self):
        return {"type": "boost-regressor", "booster": self.booster.to_dict()}

    @staticmethod
    def from_dict(d):
        return BoostRegressor(_Booster.from_dict(d["booster"]))


class BoostBinaryClassifier:
    def __init__(self, booster: _Booster):
        self.booster = booster

    def predict_proba_values(self, values):
        p = _sigmoid(self.booster.score_values(values))
        return np.column_stack([1.0 - p, p])

    def to_dict(self):
        return {"type": "boost-binary", "booster": self.booster.to_dict()}

    @staticmethod
    def from_dict(d):
        return BoostBinaryClassifier(_Booster.from_dict(d["booster"]))


class BoostOvRClassifier:
    """One binary booster per class; probabilities normalised over classes."""

    def __init__(self, boosters):
        self.boosters = list(boosters)

    def predict_proba_values(self, values):
        scores = np.column_stack(
            [_sigmoid(b.score_values(values)) for b in self.boosters]
        )
        total = scores.sum(axis=1, keepdims=True)
        total[total == 0] = 1.0
        return scores / total

    def to_dict(self):
        return {
            "type": "boost-ovr",
            "boosters": [b.to_dict() for b in self.boosters],
        }

    @staticmethod
    def from_dict(d):
        return BoostOvRClassifier([_Booster.from_dict(b) for b in d["boosters"]])


def _boost_regression(values, y, params, variant, rng):
    base = float(np.mean(y))
    score = np.full(values.shape[0], base)
    trees = []
    for _ in range(params.n_rounds):
        grad = score - y  # d/dF of 0.5*(F - y)^2
        hess = np.ones_like(y)
        tree = _fit_round(values, grad, hess, params, variant, rng)
        trees.append(tree)
        score = score + params.learning_rate * predict_tree(tree, values)
    return _Booster(base, trees, params.learning_rate)


def _boost_binary(values, y01, params, variant, rng):
    p0 = float(np.clip(np.mean(y01), 1e-6, 1.0 - 1e-6))
    base = float(np.log(p0 / (1.0 - p0)))
    score = np.full(values.shape[0], base)
    trees = []
    for _ in range(params.n_rounds):
        p = _sigmoid(score)
        grad = p - y01
        hess = p * (1.0 - p)
        tree = _fit_round(values, grad, hess, params, variant, rng)
        trees.append(tree)
        score = score + params.learning_rate * predict_tree(tree, values)
    return _Booster(base, trees, params.learning_rate)


def fit_gbt(
    X,
    y,
    params: BoostParams | None = None,
    variant: str = "first-order",
    task: str = "regression",
    target_transform: str = "none",
    seed: int = 0,
) -> TrainedModel:
    """Fit a boosted-tree ensemble.

    ``variant`` selects plain residual boosting ("first-order") or the
    regularised second-order objective ("second-order-regularised").
    """
    if variant not in VARIANTS:
        raise ModelError(f"unknown variant {variant!r}")
    params = params or BoostParams()
    values = as_values(X)
    y = np.asarray(y)
    if y.shape[0] != values.shape[0] or values.shape[0] < 2:
        raise ModelError("need |y| = rows(X) >= 2")
    targets, classes = prepare_targets(y, task, target_transform)
    rng = np.random.default_rng(seed)

    if task == "regression":
        inner = BoostRegressor(_boost_regression(values, targets, params, variant, rng))
    elif classes.shape[0] == 2:
        inner = BoostBinaryClassifier(
            _boost_binary(values, targets.astype(float), params, variant, rng)
        )
    else:
        boosters = [
            _boost_binary(values, (targets == c).astype(float), params, variant, rng)
            for c in range(classes.shape[0])
        ]
        inner = BoostOvRClassifier(boosters)

    return TrainedModel(
        kind="gbt-reg" if variant == "second-order-regularised" else "gbt",
        task=task,
        inner=inner,
        feature_names=getattr(X, "feature_names", None),
        target_transform=target_transform if task == "regression" else "none",
        classes=classes,
        params=params,
    )
