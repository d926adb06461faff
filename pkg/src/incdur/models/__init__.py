"""Baseline learners with a uniform fit/predict contract."""

from __future__ import annotations

from .base import (
    MODEL_KINDS,
    BoostParams,
    ForestParams,
    KnnParams,
    LinearParams,
    ModelError,
    TrainedModel,
    TreeParams,
    make_params,
    params_to_dict,
)
from .boosting import fit_gbt
from .cart import fit_tree
from .forest import fit_random_forest
from .knn import fit_knn
from .linear import fit_linear
from .serialize import model_from_json, model_to_json

__all__ = [
    "MODEL_KINDS",
    "TreeParams",
    "BoostParams",
    "ForestParams",
    "KnnParams",
    "LinearParams",
    "ModelError",
    "TrainedModel",
    "make_params",
    "params_to_dict",
    "fit_tree",
    "fit_gbt",
    "fit_random_forest",
    "fit_knn",
    "fit_linear",
    "fit_model",
    "model_to_json",
    "model_from_json",
]


def fit_model(
    kind: str,
    X,
    y,
    params=None,
    task: str = "regression",
    target_transform: str = "none",
    seed: int = 0,
) -> TrainedModel:
    """Fit any model kind through one entry point (used by sweeps and tuning)."""
    if kind == "tree":
        return fit_tree(X, y, params, task, target_transform)
    if kind == "gbt":
        return fit_gbt(X, y, params, "first-order", task, target_transform, seed)
    if kind == "gbt-reg":
        return fit_gbt(
            X, y, params, "second-order-regularised", task, target_transform, seed
        )
    if kind == "random-forest":
        return fit_random_forest(X, y, params, task, target_transform, seed)
    if kind == "knn":
        return fit_knn(X, y, params, task, target_transform)
    if kind == "linear":
        return fit_linear(X, y, params, task, target_transform)
    raise ModelError(f"unknown model kind {kind!r}")
