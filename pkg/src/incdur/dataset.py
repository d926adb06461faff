"""Incident-log datasets: loading, encoding, synthesis and profiling."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

__all__ = [
    "FeatureColumn",
    "FeatureSchema",
    "Dataset",
    "EncodedMatrix",
    "Encoder",
    "ProfileReport",
    "PlantedEffect",
    "SynthConfig",
    "load_csv",
    "encode",
    "synthesize",
    "profile",
    "ecdf_at",
]

MISSING_LEVEL = "missing"

#: Distributions fitted during profiling, all positive-support and fitted in
#: log/scale space with the location pinned at zero.
FIT_DISTRIBUTIONS = {
    "log-normal": stats.lognorm,
    "log-logistic": stats.fisk,
    "weibull": stats.weibull_min,
}


class DatasetError(ValueError):
    """Raised for schema violations and unusable inputs."""


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    kind: str  # numeric | categorical | boolean
    unit: str | None = None

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical", "boolean"):
            raise DatasetError(f"unknown column kind {self.kind!r} for {self.name!r}")


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[FeatureColumn, ...]
    target_column: str = "duration"

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(names) != len(set(names)):
            raise DatasetError("column names must be unique")
        if self.target_column in names:
            raise DatasetError("target column must not be listed among features")
        if not names:
            raise DatasetError("need at least one feature column")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> FeatureColumn:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True)
class Dataset:
    """Raw incident records: one value per schema column plus a duration.

    Missing values are stored as ``None``. Durations are finite, >= 0 minutes.
    Immutable after construction; safe to share across workers.
    """

    schema: FeatureSchema
    rows: tuple[tuple, ...]
    durations: np.ndarray
    load_report: dict = field(default_factory=dict, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        durations = np.asarray(self.durations, dtype=float)
        object.__setattr__(self, "durations", durations)
        if len(self.rows) != durations.shape[0]:
            raise DatasetError("durations length must match row count")
        n_cols = len(self.schema.columns)
        for r in self.rows:
            if len(r) != n_cols:
                raise DatasetError("every row must have one value per schema column")
        if durations.size and (
            not np.all(np.isfinite(durations)) or np.any(durations < 0)
        ):
            raise DatasetError("durations must be finite and >= 0")

    def __len__(self) -> int:
        return len(self.rows)

    def column_values(self, name: str) -> list:
        j = self.schema.names.index(name)
        return [r[j] for r in self.rows]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            schema=self.schema,
            rows=tuple(self.rows[i] for i in indices),
            durations=self.durations[indices],
        )


@dataclass(frozen=True)
class EncodedMatrix:
    """Fully numeric design matrix with one-hot expanded categoricals."""

    values: np.ndarray
    feature_names: tuple[str, ...]
    row_index: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self, "row_index", np.asarray(self.row_index, dtype=int)
        )
        if values.ndim != 2 or values.shape[1] != len(self.feature_names):
            raise DatasetError("values shape must match feature_names")
        if values.size and not np.all(np.isfinite(values)):
            raise DatasetError("encoded matrix must not contain non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def take(self, indices) -> "EncodedMatrix":
        indices = np.asarray(indices, dtype=int)
        return EncodedMatrix(
            self.values[indices], self.feature_names, self.row_index[indices]
        )


class Encoder:
    """Deterministic dataset -> matrix encoder with a frozen vocabulary.

    Column order follows the schema; categorical levels are sorted
    lexicographically and fixed at fit time. Missing numerics take the
    training median, missing or unseen categoricals map to the dedicated
    "missing" level (or to no active indicator when none was observed).
    """

    def __init__(self):
        self._fitted = False
        self._plan = []  # (column, kind, payload)

    def fit(self, dataset: Dataset) -> "Encoder":
        if len(dataset) == 0:
            raise DatasetError("cannot encode an empty dataset")
        plan = []
        for col in dataset.schema.columns:
            values = dataset.column_values(col.name)
            if col.kind == "categorical":
                levels = sorted(
                    {str(v) for v in values if v is not None}
                    | ({MISSING_LEVEL} if any(v is None for v in values) else set())
                )
                plan.append((col.name, "categorical", tuple(levels)))
            else:
                present = [float(v) for v in values if v is not None]
                if not present:
                    raise DatasetError(
                        f"column {col.name!r} is entirely missing; cannot impute"
                    )
                plan.append((col.name, "numeric", float(np.median(present))))
        self._plan = plan
        self._fitted = True
        return self

    @property
    def feature_names(self) -> tuple[str, ...]:
        self._require_fitted()
        names = []
        for name, kind, payload in self._plan:
            if kind == "categorical":
                names.extend(f"{name}={lvl}" for lvl in payload)
            else:
                names.append(name)
        return tuple(names)

    def transform(self, dataset: Dataset) -> EncodedMatrix:
        self._require_fitted()
        n = len(dataset)
        cols = []
        for name, kind, payload in self._plan:
            j = dataset.schema.names.index(name)
            raw = [r[j] for r in dataset.rows]
            if kind == "categorical":
                block = np.zeros((n, len(payload)))
                index = {lvl: i for i, lvl in enumerate(payload)}
                fallback = index.get(MISSING_LEVEL)
                for i, v in enumerate(raw):
                    key = MISSING_LEVEL if v is None else str(v)
                    pos = index.get(key, fallback)
                    if pos is not None:
                        block[i, pos] = 1.0
                cols.append(block)
            else:
                col = np.array(
                    [payload if v is None else float(v) for v in raw]
                ).reshape(n, 1)
                cols.append(col)
        values = np.hstack(cols) if cols else np.zeros((n, 0))
        return EncodedMatrix(values, self.feature_names, np.arange(n))

    def _require_fitted(self):
        if not self._fitted:
            raise DatasetError("encoder is not fitted")


def encode(dataset: Dataset) -> EncodedMatrix:
    """Fit an encoder on ``dataset`` and return its encoded matrix."""
    return Encoder().fit(dataset).transform(dataset)


def load_csv(path, schema: FeatureSchema, column_map: dict | None = None) -> Dataset:
    """Load an RFC-4180 CSV into a Dataset.

    ``column_map`` maps schema names (and the target name) to CSV header
    names; identity by default. Rows whose target does not parse as a
    non-negative number are dropped and counted in ``load_report``.
    """
    column_map = dict(column_map or {})
    wanted = list(schema.names) + [schema.target_column]
    mapped = {name: column_map.get(name, name) for name in wanted}

    try:
        handle = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DatasetError(f"no such file: {path}") from None

    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for name, csv_name in mapped.items():
            if csv_name not in header:
                raise DatasetError(
                    f"mapped column {csv_name!r} (for {name!r}) missing from header"
                )
        rows = []
        durations = []
        dropped = 0
        for record in reader:
            raw_target = (record.get(mapped[schema.target_column]) or "").strip()
            try:
                target = float(raw_target)
            except ValueError:
                dropped += 1
                continue
            if not math.isfinite(target) or target < 0:
                dropped += 1
                continue
            row = []
            for col in schema.columns:
                raw = (record.get(mapped[col.name]) or "").strip()
                if raw == "":
                    row.append(None)
                elif col.kind == "categorical":
                    row.append(raw)
                elif col.kind == "boolean":
                    row.append(_parse_bool(raw))
                else:
                    try:
                        row.append(float(raw))
                    except ValueError:
                        row.append(None)
            rows.append(tuple(row))
            durations.append(target)

    if not rows:
        raise DatasetError("zero usable rows")
    return Dataset(
        schema=schema,
        rows=tuple(rows),
        durations=np.array(durations),
        load_report={"n_rows": len(rows), "n_dropped": dropped},
    )


def _parse_bool(raw: str):
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "y", "t"):
        return 1.0
    if lowered in ("0", "false", "no", "n", "f"):
        return 0.0
    # numeric encodings ("1.0"/"0.0") appear in round-tripped CSVs
    try:
        value = float(lowered)
    except ValueError:
        return None
    return value if value in (0.0, 1.0) else None


# ---------------------------------------------------------------------------
# Synthetic data (stand-in for the private arterial/motorway incident logs)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantedEffect:
    """One generated feature with a known multiplicative effect on duration.

    numeric:     value ~ Uniform(low, high); multiplier = exp(slope * u)
                 where u is the value rescaled to [0, 1].
    boolean:     value ~ Bernoulli(true_rate); multiplier applies when true.
    categorical: value ~ uniform choice of ``levels``; per-level multipliers
                 (all 1.0 when omitted, i.e. a pure noise feature).

    ``min_base_duration`` gates the effect: it only multiplies records whose
    base (pre-effect) duration exceeds it.
    """

    name: str
    kind: str = "numeric"
    low: float = 0.0
    high: float = 1.0
    slope: float = 0.0
    true_rate: float = 0.5
    multiplier: float = 1.0
    levels: tuple[str, ...] = ()
    multipliers: tuple[float, ...] = ()
    min_base_duration: float = 0.0


@dataclass(frozen=True)
class SynthConfig:
    n: int
    seed: int
    mu: float
    sigma: float
    effects: tuple[PlantedEffect, ...] = ()
    corrupt_fraction: float = 0.0
    corrupt_multiplier: float = 30.0

    def __post_init__(self):
        if self.n < 1:
            raise DatasetError("n must be >= 1")
        if self.sigma <= 0:
            raise DatasetError("sigma must be > 0")
        if not 0.0 <= self.corrupt_fraction < 1.0:
            raise DatasetError("corrupt_fraction must be in [0, 1)")


def synthesize(config: SynthConfig) -> Dataset:
    """Draw a reproducible long-tail dataset with planted feature effects.

    Durations are exp(Normal(mu, sigma)) times the product of the planted
    multiplicative effects. ``corrupt_fraction`` optionally multiplies a
    random subset of durations by ``corrupt_multiplier`` to plant
    implausible records; their indices are recorded in ``meta``.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n
    base = np.exp(rng.normal(config.mu, config.sigma, size=n))

    columns = []
    feature_cols = []
    multiplier = np.ones(n)
    for eff in config.effects:
        if eff.kind == "numeric":
            x = rng.uniform(eff.low, eff.high, size=n)
            span = eff.high - eff.low
            unit = (x - eff.low) / span if span > 0 else np.zeros(n)
            m = np.exp(eff.slope * unit)
            feature_cols.append([float(v) for v in x])
        elif eff.kind == "boolean":
            x = (rng.random(n) < eff.true_rate).astype(float)
            m = np.where(x > 0, eff.multiplier, 1.0)
            feature_cols.append([float(v) for v in x])
        elif eff.kind == "categorical":
            if not eff.levels:
                raise DatasetError(f"effect {eff.name!r} needs levels")
            idx = rng.integers(0, len(eff.levels), size=n)
            mults = (
                np.asarray(eff.multipliers, dtype=float)
                if eff.multipliers
                else np.ones(len(eff.levels))
            )
            if mults.shape[0] != len(eff.levels):
                raise DatasetError(f"effect {eff.name!r}: one multiplier per level")
            m = mults[idx]
            feature_cols.append([eff.levels[i] for i in idx])
        else:
            raise DatasetError(f"unknown effect kind {eff.kind!r}")
        active = base > eff.min_base_duration
        multiplier = multiplier * np.where(active, m, 1.0)
        columns.append(
            FeatureColumn(eff.name, eff.kind if eff.kind != "boolean" else "boolean")
        )

    durations = base * multiplier
    corrupted_idx = np.array([], dtype=int)
    if config.corrupt_fraction > 0:
        k = int(config.corrupt_fraction * n)
        corrupted_idx = np.sort(rng.choice(n, size=k, replace=False))
        durations = durations.copy()
        durations[corrupted_idx] *= config.corrupt_multiplier

    if not columns:
        # keep the dataset schema-valid even with no planted effects
        columns = [FeatureColumn("noise", "numeric")]
        feature_cols = [[float(v) for v in rng.uniform(0, 1, size=n)]]

    schema = FeatureSchema(columns=tuple(columns))
    rows = tuple(zip(*feature_cols))
    return Dataset(
        schema=schema,
        rows=rows,
        durations=durations,
        meta={"corrupted_indices": corrupted_idx.tolist()},
    )


# ---------------------------------------------------------------------------
# Profiling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileReport:
    """ECDF, log-space histogram and MLE distribution fits with AIC ranking."""

    ecdf: tuple[tuple[float, float], ...]
    log_histogram: dict
    fitted: tuple[dict, ...]  # sorted by AIC ascending; failed fits flagged
    n: int
    mean_duration: float
    zero_shifted: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "mean_duration": self.mean_duration,
                "zero_shifted": self.zero_shifted,
                "ecdf": [list(p) for p in self.ecdf],
                "log_histogram": self.log_histogram,
                "fitted": list(self.fitted),
            },
            indent=2,
        )


def ecdf_at(durations, t: float) -> float:
    durations = np.asarray(durations, dtype=float)
    return float(np.sum(durations <= t)) / durations.shape[0]


def profile(dataset: Dataset, n_bins: int = 30) -> ProfileReport:
    """Profile the duration distribution of a dataset.

    Distribution fitting (log-normal, log-logistic, Weibull; location pinned
    at zero) requires at least 10 records; the ECDF is computed for any size.
    Zero durations are shifted by +0.5 minutes before fitting, since the
    fitted families have positive support; the shift count is reported.
    """
    d = np.asarray(dataset.durations, dtype=float)
    if d.size < 1:
        raise DatasetError("profile needs at least one record")

    xs = np.unique(d)
    counts = np.searchsorted(np.sort(d), xs, side="right")
    ecdf = tuple((float(x), float(c) / d.size) for x, c in zip(xs, counts))

    log_d = np.log(d + 1.0)
    hist, edges = np.histogram(log_d, bins=n_bins)
    log_histogram = {"edges": edges.tolist(), "counts": hist.tolist()}

    zero_shifted = int(np.sum(d == 0))
    fitted: list[dict] = []
    if d.size >= 10:
        shifted = np.where(d == 0, 0.5, d)
        for name, dist in FIT_DISTRIBUTIONS.items():
            entry = {"distribution": name}
            try:
                params = dist.fit(shifted, floc=0)
                loglik = float(np.sum(dist.logpdf(shifted, *params)))
                if not math.isfinite(loglik):
                    raise FloatingPointError("non-finite log-likelihood")
                k = len(params) - 1  # loc was fixed
                entry.update(
                    params=[float(p) for p in params],
                    log_likelihood=loglik,
                    aic=2.0 * k - 2.0 * loglik,
                    failed=False,
                )
            except Exception as exc:  # fit divergence: flag, keep the others
                entry.update(failed=True, error=str(exc), aic=math.inf)
            fitted.append(entry)
        fitted.sort(key=lambda e: e["aic"])

    return ProfileReport(
        ecdf=ecdf,
        log_histogram=log_histogram,
        fitted=tuple(fitted),
        n=int(d.size),
        mean_duration=float(np.mean(d)),
        zero_shifted=zero_shifted,
    )
