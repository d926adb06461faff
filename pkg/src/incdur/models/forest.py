"""Random forest: bagged CART trees with per-split feature subsampling."""

from __future__ import annotations

import numpy as np

from .base import ForestParams, ModelError, TrainedModel, as_values, prepare_targets
from .tree import Node, grow_gini_tree, grow_mse_tree, predict_tree


class ForestRegressor:
    def __init__(self, trees):
        self.trees = list(trees)

    def predict_values(self, values):
        preds = np.stack([predict_tree(t, values) for t in self.trees])
        return preds.mean(axis=0)

    def to_dict(self):
        return {"type": "forest-regressor", "trees": [t.to_dict() for t in self.trees]}

    @staticmethod
    def from_dict(d):
        return ForestRegressor([Node.from_dict(t) for t in d["trees"]])


class ForestClassifier:
    """Majority vote; ties go to the lower class index (lexicographically
    smaller label, since classes are stored sorted)."""

    def __init__(self, trees, n_classes):
        self.trees = list(trees)
        self.n_classes = int(n_classes)

    def predict_proba_values(self, values):
        votes = np.zeros((values.shape[0], self.n_classes))
        for tree in self.trees:
            dist = predict_tree(tree, values)
            picked = np.argmax(dist, axis=1)
            votes[np.arange(values.shape[0]), picked] += 1.0
        return votes / len(self.trees)

    def to_dict(self):
        return {
            "type": "forest-classifier",
            "n_classes": self.n_classes,
            "trees": [t.to_dict() for t in self.trees],
        }

    @staticmethod
    def from_dict(d):
        return ForestClassifier(
            [Node.from_dict(t) for t in d["trees"]], d["n_classes"]
        )


def fit_random_forest(
    X,
    y,
    params: ForestParams | None = None,
    task: str = "regression",
    target_transform: str = "none",
    seed: int = 0,
) -> TrainedModel:
    params = params or ForestParams()
    values = as_values(X)
    y = np.asarray(y)
    if y.shape[0] != values.shape[0] or values.shape[0] < 2:
        raise ModelError("need |y| = rows(X) >= 2")
    targets, classes = prepare_targets(y, task, target_transform)
    rng = np.random.default_rng(seed)

    n, m = values.shape
    frac = params.feature_fraction
    if frac is None:
        frac = max(1.0 / m, np.sqrt(m) / m)

    trees = []
    for _ in range(params.n_trees):
        size = max(2, int(params.bootstrap_fraction * n))
        if params.bootstrap:
            rows = np.sort(rng.integers(0, n, size=size))
        else:
            rows = np.sort(rng.permutation(n)[:size]) if size < n else np.arange(n)
        tree_rng = np.random.default_rng(rng.integers(0, 2**63))
        if task == "regression":
            tree = grow_mse_tree(
                values[rows], targets[rows], params.max_depth,
                params.min_samples_leaf, feature_fraction=frac, rng=tree_rng,
            )
        else:
            tree = grow_gini_tree(
                values[rows], targets[rows], len(classes), params.max_depth,
                params.min_samples_leaf, feature_fraction=frac, rng=tree_rng,
            )
        trees.append(tree)

    inner = (
        ForestRegressor(trees)
        if task == "regression"
        else ForestClassifier(trees, len(classes))
    )
    return TrainedModel(
        kind="random-forest",
        task=task,
        inner=inner,
        feature_names=getattr(X, "feature_names", None),
        target_transform=target_transform if task == "regression" else "none",
        classes=classes,
        params=params,
    )
