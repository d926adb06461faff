"""k-nearest neighbours on z-scored features with deterministic tie-breaks."""

from __future__ import annotations

import numpy as np

from .base import KnnParams, ModelError, TrainedModel, as_values, prepare_targets


class KnnModel:
    """Stores the standardised training set; exact distance ties resolve to
    the lower training-row index (stable sort)."""

    def __init__(self, train, targets, k, mean, std, task, n_classes=0):
        self.train = train
        self.targets = targets
        self.k = int(k)
        self.mean = mean
        self.std = std
        self.task = task
        self.n_classes = int(n_classes)

    def _neighbours(self, values):
        q = (values - self.mean) / self.std
        out = np.empty((q.shape[0], self.k), dtype=int)
        chunk = max(1, int(2_000_000 / max(1, self.train.shape[0])))
        for start in range(0, q.shape[0], chunk):
            block = q[start : start + chunk]
            d = np.sqrt(
                ((block[:, None, :] - self.train[None, :, :]) ** 2).sum(axis=2)
            )
            out[start : start + block.shape[0]] = np.argsort(
                d, axis=1, kind="stable"
            )[:, : self.k]
        return out

    def predict_values(self, values):
        nb = self._neighbours(values)
        return self.targets[nb].mean(axis=1)

    def predict_proba_values(self, values):
        nb = self._neighbours(values)
        votes = np.zeros((values.shape[0], self.n_classes))
        for c in range(self.n_classes):
            votes[:, c] = (self.targets[nb] == c).sum(axis=1)
        return votes / self.k

    def to_dict(self):
        return {
            "type": "knn",
            "task": self.task,
            "k": self.k,
            "n_classes": self.n_classes,
            "train": self.train.tolist(),
            "targets": self.targets.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return KnnModel(
            np.asarray(d["train"], dtype=float),
            np.asarray(d["targets"]),
            d["k"],
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["std"], dtype=float),
            d["task"],
            d["n_classes"],
        )


def fit_knn(
    X,
    y,
    params: KnnParams | None = None,
    task: str = "regression",
    target_transform: str = "none",
) -> TrainedModel:
    params = params or KnnParams()
    values = as_values(X)
    y = np.asarray(y)
    if y.shape[0] != values.shape[0]:
        raise ModelError("need |y| = rows(X)")
    if params.k > values.shape[0]:
        raise ModelError(f"k={params.k} exceeds training size {values.shape[0]}")
    targets, classes = prepare_targets(y, task, target_transform)

    mean = values.mean(axis=0)
    std = values.std(axis=0)
    std = np.where(std == 0, 1.0, std)
    inner = KnnModel(
        (values - mean) / std,
        targets,
        params.k,
        mean,
        std,
        task,
        0 if classes is None else len(classes),
    )
    return TrainedModel(
        kind="knn",
        task=task,
        inner=inner,
        feature_names=getattr(X, "feature_names", None),
        target_transform=target_transform if task == "regression" else "none",
        classes=classes,
        params=params,
    )
