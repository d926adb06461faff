"""Versioned JSON round-trip for trained models."""

from __future__ import annotations

import json

import numpy as np

from .base import ModelError, TrainedModel, make_params, params_to_dict
from .boosting import BoostBinaryClassifier, BoostOvRClassifier, BoostRegressor
from .cart import TreeClassifier, TreeRegressor
from .forest import ForestClassifier, ForestRegressor
from .knn import KnnModel
from .linear import LinearRegressor, LogisticClassifier

FORMAT_VERSION = 1

_INNER_TYPES = {
    "tree-regressor": TreeRegressor,
    "tree-classifier": TreeClassifier,
    "boost-regressor": BoostRegressor,
    "boost-binary": BoostBinaryClassifier,
    "boost-ovr": BoostOvRClassifier,
    "forest-regressor": ForestRegressor,
    "forest-classifier": ForestClassifier,
    "knn": KnnModel,
    "linear-regressor": LinearRegressor,
    "logistic": LogisticClassifier,
}


def model_to_json(model: TrainedModel) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "task": model.task,
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "target_transform": model.target_transform,
        "classes": model.classes.tolist() if model.classes is not None else None,
        "params": params_to_dict(model.params) if model.params is not None else None,
        "inner": model.inner.to_dict(),
    }
    return json.dumps(doc)


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelError(f"unsupported model format {doc.get('format_version')!r}")
    inner_doc = doc["inner"]
    inner_cls = _INNER_TYPES.get(inner_doc.get("type"))
    if inner_cls is None:
        raise ModelError(f"unknown inner model type {inner_doc.get('type')!r}")
    params = None
    if doc.get("params") is not None:
        raw = dict(doc["params"])
        if raw.get("goss") is not None:
            raw["goss"] = tuple(raw["goss"])
        params = make_params(doc["kind"], **raw)
    return TrainedModel(
        kind=doc["kind"],
        task=doc["task"],
        inner=inner_cls.from_dict(inner_doc),
        feature_names=tuple(doc["feature_names"]) if doc["feature_names"] else None,
        target_transform=doc["target_transform"],
        classes=np.asarray(doc["classes"]) if doc["classes"] is not None else None,
        params=params,
    )
