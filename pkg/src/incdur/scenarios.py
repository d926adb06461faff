"""Extrapolation scenarios across duration regimes, quantiled
time-folding, and the pipeline/fusion composite models.

Records are split at a duration threshold into subset A (short-term,
duration <= tc) and subset B (long-term). A scenario X-to-Y trains on
subset X and evaluates on subset Y; same-population scenarios use
cross-validation instead, since train and test must stay disjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .cv import cross_val_predict, derive_seed, fold_indexes
from .dataset import Dataset, Encoder
from .labeling import binary_labels
from .metrics import mape_excluding_zero, rmse
from .models import TrainedModel, fit_model
from .tuning import CvPlan

__all__ = [
    "SCENARIO_NAMES",
    "AbSplit",
    "ScenarioSpec",
    "FusionConfig",
    "PipelineModel",
    "FusionModel",
    "split_ab",
    "run_scenario",
    "scenario_table",
    "quantiled_time_folding",
    "fit_pipeline",
    "predict_pipeline",
    "fit_fusion",
    "predict_fusion",
]

SCENARIO_NAMES = (
    "AlltoAll",
    "AtoA",
    "AtoB",
    "BtoA",
    "BtoB",
    "AlltoA",
    "AlltoB",
)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class AbSplit:
    """Duration-threshold split: A holds durations <= tc, B the rest."""

    tc: float
    a_indices: np.ndarray
    b_indices: np.ndarray

    @property
    def a_empty(self) -> bool:
        return self.a_indices.shape[0] == 0

    @property
    def b_empty(self) -> bool:
        return self.b_indices.shape[0] == 0


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    tc: float
    model_kind: str
    plan: CvPlan = field(default_factory=lambda: CvPlan(n_folds=10))
    model_params: object = None

    def __post_init__(self):
        if self.name not in SCENARIO_NAMES:
            raise ScenarioError(f"unknown scenario {self.name!r}")
        if self.tc <= 0:
            raise ScenarioError("tc must be > 0")


@dataclass(frozen=True)
class FusionConfig:
    """Base-model kinds for the composite models. The pipeline uses the
    classifier plus the two subset regressors; fusion adds the all-data
    regressor and a meta-regressor over the 4 base outputs."""

    classifier_kind: str = "gbt"
    regressor_a_kind: str = "gbt"
    regressor_b_kind: str = "gbt"
    regressor_all_kind: str = "gbt"
    meta_kind: str = "linear"
    classifier_params: object = None
    regressor_a_params: object = None
    regressor_b_params: object = None
    regressor_all_params: object = None
    meta_params: object = None
    target_transform: str = "none"


def split_ab(dataset: Dataset, tc: float) -> AbSplit:
    """Partition record indices at the duration threshold (<= tc goes to A)."""
    if tc <= 0:
        raise ScenarioError("tc must be > 0")
    durations = dataset.durations
    a = np.flatnonzero(durations <= tc)
    b = np.flatnonzero(durations > tc)
    return AbSplit(tc=float(tc), a_indices=a, b_indices=b)


def _require(split: AbSplit, subset: str, scenario: str):
    if subset == "A" and split.a_empty:
        raise ScenarioError(f"scenario {scenario} requires a non-empty subset A")
    if subset == "B" and split.b_empty:
        raise ScenarioError(f"scenario {scenario} requires a non-empty subset B")


def _encode_on(dataset: Dataset, fit_indices: np.ndarray) -> np.ndarray:
    """Encode all rows with an encoder fitted on the training population,
    so categorical levels unseen in training map to the missing indicator."""
    encoder = Encoder().fit(dataset.subset(fit_indices))
    return encoder.transform(dataset).values


def run_scenario(dataset: Dataset, spec: ScenarioSpec) -> dict:
    """MAPE/RMSE and per-record predictions for one train/test scenario.

    Cross-subset scenarios (AtoB, BtoA) fit once on the full source subset;
    same-population scenarios cross-validate; AlltoA/AlltoB cross-validate
    over everything and score only test records in the target subset.
    """
    split = split_ab(dataset, spec.tc)
    plan = spec.plan
    name = spec.name
    durations = dataset.durations

    if name in ("AtoB", "BtoA"):
        source, target = ("A", "B") if name == "AtoB" else ("B", "A")
        _require(split, source, name)
        _require(split, target, name)
        train = split.a_indices if source == "A" else split.b_indices
        test = split.b_indices if target == "B" else split.a_indices
        values = _encode_on(dataset, train)
        model = fit_model(
            spec.model_kind,
            values[train],
            durations[train],
            params=spec.model_params,
            task="regression",
            target_transform=plan.target_transform,
            seed=derive_seed(plan.seed, 0),
        )
        predictions = model.predict(values[test])
        test_indices = test
    else:
        if name in ("AtoA", "AlltoA"):
            _require(split, "A", name)
        if name in ("BtoB", "AlltoB"):
            _require(split, "B", name)
        population = {
            "AlltoAll": np.arange(len(dataset)),
            "AlltoA": np.arange(len(dataset)),
            "AlltoB": np.arange(len(dataset)),
            "AtoA": split.a_indices,
            "BtoB": split.b_indices,
        }[name]
        values = _encode_on(dataset, population)
        oof = cross_val_predict(
            spec.model_kind,
            values[population],
            durations[population],
            plan.n_folds,
            params=spec.model_params,
            task="regression",
            target_transform=plan.target_transform,
            seed=plan.seed,
        )
        if name == "AlltoA":
            keep = np.isin(population, split.a_indices)
        elif name == "AlltoB":
            keep = np.isin(population, split.b_indices)
        else:
            keep = np.ones(population.shape[0], dtype=bool)
        test_indices = population[keep]
        predictions = oof[keep]

    actual = durations[test_indices]
    mape, excluded = mape_excluding_zero(actual, predictions)
    return {
        "scenario": name,
        "model": spec.model_kind,
        "tc": spec.tc,
        "mape": mape,
        "rmse": rmse(actual, predictions),
        "mape_excluded_zeros": excluded,
        "n_test": int(test_indices.shape[0]),
        "test_indices": test_indices,
        "predictions": predictions,
    }


def scenario_table(
    dataset: Dataset,
    models,
    tc: float,
    plan: CvPlan | None = None,
    scenarios=SCENARIO_NAMES,
    workers: int = 1,
) -> list[dict]:
    """One row per (scenario, model), in fixed order, without index arrays."""
    plan = plan or CvPlan(n_folds=10)
    specs = [
        ScenarioSpec(name=name, tc=tc, model_kind=kind, plan=plan)
        for name in scenarios
        for kind in models
    ]
    rows = parallel_map(lambda s: run_scenario(dataset, s), specs, workers)
    return [
        {k: v for k, v in row.items() if k not in ("test_indices", "predictions")}
        for row in rows
    ]


def quantiled_time_folding(
    dataset: Dataset,
    model_kind: str,
    n_groups: int = 10,
    model_params=None,
    seed: int = 0,
    target_transform: str = "none",
    workers: int = 1,
) -> list[dict]:
    """Per-duration-regime error: sort by duration, cut into equal
    contiguous groups, train on the other groups and report each group's
    RMSE."""
    n = len(dataset)
    if n < n_groups:
        raise ScenarioError("need at least n_groups records")
    order = np.argsort(dataset.durations, kind="stable")
    values = _encode_on(dataset, np.arange(n))[order]
    durations = dataset.durations[order]

    def one_group(g):
        train, test = fold_indexes(n, n_groups, g)
        model = fit_model(
            model_kind,
            values[train],
            durations[train],
            params=model_params,
            task="regression",
            target_transform=target_transform,
            seed=derive_seed(seed, g),
        )
        pred = model.predict(values[test])
        return {
            "group": g,
            "duration_min": float(durations[test].min()),
            "duration_max": float(durations[test].max()),
            "n": int(test.shape[0]),
            "rmse": rmse(durations[test], pred),
        }

    return parallel_map(one_group, range(n_groups), workers)


@dataclass(frozen=True)
class PipelineModel:
    """Classifier routes each record to the subset-specialised regressor."""

    tc: float
    encoder: Encoder
    classifier: TrainedModel
    regressor_a: TrainedModel
    regressor_b: TrainedModel


@dataclass(frozen=True)
class FusionModel:
    """Meta-regressor over (class, regA, regB, regAll) base predictions."""

    tc: float
    encoder: Encoder
    classifier: TrainedModel
    regressor_a: TrainedModel
    regressor_b: TrainedModel
    regressor_all: TrainedModel
    meta: TrainedModel


def _as_matrix(model, X) -> np.ndarray:
    if isinstance(X, Dataset):
        return model.encoder.transform(X).values
    return np.asarray(X, dtype=float)


def _fit_bases(config, values, durations, labels, rows, tc, seed):
    """Fit classifier + subset regressors (+ all-data regressor) on the
    given row subset."""
    d = durations[rows]
    a_rows = rows[d <= tc]
    b_rows = rows[d > tc]
    if a_rows.shape[0] < 2 or b_rows.shape[0] < 2:
        raise ScenarioError(
            "both duration subsets need at least 2 training records"
        )
    classifier = fit_model(
        config.classifier_kind, values[rows], labels[rows],
        params=config.classifier_params, task="classification",
        seed=derive_seed(seed, 1),
    )
    reg_a = fit_model(
        config.regressor_a_kind, values[a_rows], durations[a_rows],
        params=config.regressor_a_params, task="regression",
        target_transform=config.target_transform, seed=derive_seed(seed, 2),
    )
    reg_b = fit_model(
        config.regressor_b_kind, values[b_rows], durations[b_rows],
        params=config.regressor_b_params, task="regression",
        target_transform=config.target_transform, seed=derive_seed(seed, 3),
    )
    reg_all = fit_model(
        config.regressor_all_kind, values[rows], durations[rows],
        params=config.regressor_all_params, task="regression",
        target_transform=config.target_transform, seed=derive_seed(seed, 4),
    )
    return classifier, reg_a, reg_b, reg_all


def fit_pipeline(
    dataset: Dataset, config: FusionConfig, tc: float, seed: int = 0
) -> PipelineModel:
    split = split_ab(dataset, tc)
    if split.a_empty or split.b_empty:
        raise ScenarioError("pipeline needs both duration subsets non-empty")
    encoder = Encoder().fit(dataset)
    values = encoder.transform(dataset).values
    labels = binary_labels(dataset.durations, tc)
    classifier, reg_a, reg_b, _ = _fit_bases(
        config, values, dataset.durations, labels,
        np.arange(len(dataset)), tc, seed,
    )
    return PipelineModel(
        tc=float(tc), encoder=encoder,
        classifier=classifier, regressor_a=reg_a, regressor_b=reg_b,
    )


def predict_pipeline(model: PipelineModel, X) -> np.ndarray:
    values = _as_matrix(model, X)
    cls = model.classifier.predict(values)
    out = model.regressor_a.predict(values)
    long_term = cls == 1
    if long_term.any():
        out = out.copy()
        out[long_term] = model.regressor_b.predict(values[long_term])
    return out


def _meta_features(classifier, reg_a, reg_b, reg_all, values) -> np.ndarray:
    return np.column_stack(
        [
            classifier.predict(values).astype(float),
            reg_a.predict(values),
            reg_b.predict(values),
            reg_all.predict(values),
        ]
    )


def fit_fusion(
    dataset: Dataset,
    config: FusionConfig,
    tc: float,
    folds: int = 5,
    seed: int = 0,
) -> FusionModel:
    """Meta-features are generated out-of-fold: the base models scoring a
    training record never saw it, so the meta-regressor is not trained on
    in-sample base predictions."""
    split = split_ab(dataset, tc)
    if split.a_empty or split.b_empty:
        raise ScenarioError("fusion needs both duration subsets non-empty")
    encoder = Encoder().fit(dataset)
    values = encoder.transform(dataset).values
    durations = dataset.durations
    labels = binary_labels(durations, tc)
    n = len(dataset)

    meta_x = np.empty((n, 4))
    for k in range(folds):
        train, test = fold_indexes(n, folds, k)
        bases = _fit_bases(
            config, values, durations, labels, train, tc, derive_seed(seed, 10, k)
        )
        meta_x[test] = _meta_features(*bases, values[test])

    meta = fit_model(
        config.meta_kind, meta_x, durations,
        params=config.meta_params, task="regression",
        target_transform=config.target_transform, seed=derive_seed(seed, 20),
    )
    classifier, reg_a, reg_b, reg_all = _fit_bases(
        config, values, durations, labels, np.arange(n), tc, seed
    )
    return FusionModel(
        tc=float(tc), encoder=encoder,
        classifier=classifier, regressor_a=reg_a, regressor_b=reg_b,
        regressor_all=reg_all, meta=meta,
    )


def predict_fusion(model: FusionModel, X) -> np.ndarray:
    values = _as_matrix(model, X)
    meta_x = _meta_features(
        model.classifier, model.regressor_a, model.regressor_b,
        model.regressor_all, values,
    )
    return model.meta.predict(meta_x)
