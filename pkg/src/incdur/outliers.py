"""Anomaly scoring (Isolation Forest, Local Outlier Factor) and
percentage-based record removal. Scores are higher-is-more-anomalous."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models.base import as_values

__all__ = [
    "AnomalyScores",
    "OrmParams",
    "isolation_forest_scores",
    "lof_scores",
    "remove_top_percent",
    "score_with",
]

MAX_ORM_PERCENT = 0.05
LRD_CAP = 1e12

_EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class AnomalyScores:
    scores: np.ndarray
    method: str  # isolation-forest | lof
    params: dict = field(default_factory=dict, compare=False)
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        object.__setattr__(self, "scores", scores)
        if not np.all(np.isfinite(scores)):
            raise ValueError("anomaly scores must be finite")


@dataclass(frozen=True)
class OrmParams:
    method: str = "isolation-forest"
    percent_removed: float = 0.02
    if_n_trees: int = 100
    if_subsample: int = 256
    lof_k: int = 20

    def __post_init__(self):
        if self.method not in ("isolation-forest", "lof"):
            raise ValueError(f"unknown ORM method {self.method!r}")
        if not 0.0 <= self.percent_removed <= MAX_ORM_PERCENT:
            raise ValueError(
                f"percent_removed must be in [0, {MAX_ORM_PERCENT}]"
            )
        if self.if_n_trees < 1 or self.if_subsample < 2:
            raise ValueError("need if_n_trees >= 1 and if_subsample >= 2")
        if self.lof_k < 2:
            raise ValueError("lof k must be >= 2")


def _avg_path_length(n) -> float:
    """Average unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    harmonic = math.log(n - 1) + _EULER_GAMMA if n > 2 else 1.0
    return 2.0 * harmonic - 2.0 * (n - 1) / n


def _build_isolation_tree(values, idx, depth, depth_limit, rng):
    """Nodes are (feature, split, left, right); leaves are ('leaf', size)."""
    if depth >= depth_limit or idx.shape[0] <= 1:
        return ("leaf", idx.shape[0])
    sub = values[idx]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    usable = np.flatnonzero(hi > lo)
    if usable.size == 0:
        return ("leaf", idx.shape[0])
    feat = int(rng.choice(usable))
    split = float(rng.uniform(lo[feat], hi[feat]))
    mask = sub[:, feat] < split
    if not mask.any() or mask.all():
        return ("leaf", idx.shape[0])
    return (
        feat,
        split,
        _build_isolation_tree(values, idx[mask], depth + 1, depth_limit, rng),
        _build_isolation_tree(values, idx[~mask], depth + 1, depth_limit, rng),
    )


def _tree_path_lengths(tree, values):
    out = np.zeros(values.shape[0])
    stack = [(tree, np.arange(values.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if idx.size == 0:
            continue
        if node[0] == "leaf":
            out[idx] = depth + _avg_path_length(node[1])
            continue
        feat, split, left, right = node
        mask = values[idx, feat] < split
        stack.append((left, idx[mask], depth + 1))
        stack.append((right, idx[~mask], depth + 1))
    return out


def isolation_forest_scores(
    X, params: OrmParams | None = None, seed: int = 0
) -> AnomalyScores:
    """Isolation Forest score 2^(-E[h(x)] / c(psi)), in (0, 1).

    Each tree is built on a random subsample of size psi with random
    feature/value splits; path depths are averaged across trees and
    normalised by the expected depth c(psi).
    """
    params = params or OrmParams(method="isolation-forest")
    values = as_values(X)
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows to score")
    psi = min(params.if_subsample, n)
    depth_limit = int(math.ceil(math.log2(max(2, psi))))
    rng = np.random.default_rng(seed)

    paths = np.zeros(n)
    for _ in range(params.if_n_trees):
        sample = rng.choice(n, size=psi, replace=False)
        tree = _build_isolation_tree(values, sample, 0, depth_limit, rng)
        paths += _tree_path_lengths(tree, values)
    avg_depth = paths / params.if_n_trees
    scores = np.power(2.0, -avg_depth / _avg_path_length(psi))
    return AnomalyScores(
        scores=scores,
        method="isolation-forest",
        params={"n_trees": params.if_n_trees, "subsample": psi, "seed": seed},
    )


def lof_scores(X, k: int) -> AnomalyScores:
    """Classical Local Outlier Factor; ~1 for inliers, > 1 for outliers.

    Neighbourhoods are the k nearest points with exact distance ties broken
    by lower row index. Zero-distance neighbourhoods (duplicate clusters)
    get their local reachability density capped at a large finite constant;
    the cap count is reported in ``notes``.
    """
    values = as_values(X)
    n = values.shape[0]
    if not 2 <= k < n:
        raise ValueError("need 2 <= k < number of rows")

    diff = values[:, None, :] - values[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)

    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    rows = np.arange(n)[:, None]
    k_distance = dist[rows, order][:, -1]

    reach = np.maximum(k_distance[order], dist[rows, order])
    mean_reach = reach.mean(axis=1)
    capped = int(np.sum(mean_reach == 0))
    lrd = np.where(mean_reach > 0, 1.0 / np.where(mean_reach > 0, mean_reach, 1.0), LRD_CAP)
    lof = lrd[order].mean(axis=1) / lrd
    return AnomalyScores(
        scores=lof,
        method="lof",
        params={"k": k},
        notes={"lrd_capped": capped},
    )


def remove_top_percent(scores: AnomalyScores, percent: float) -> np.ndarray:
    """Kept-index set after dropping the floor(percent * N) highest scores.

    Score ties are broken by removing the lower row index first. The kept
    set is returned sorted ascending.
    """
    if not 0.0 <= percent <= 1.0:
        raise ValueError("percent must be in [0, 1]")
    s = scores.scores
    n = s.shape[0]
    n_remove = int(percent * n)
    if n_remove == 0:
        return np.arange(n)
    order = np.argsort(-s, kind="stable")
    removed = set(order[:n_remove].tolist())
    return np.array([i for i in range(n) if i not in removed], dtype=int)


def score_with(params: OrmParams, X, seed: int = 0) -> AnomalyScores:
    """Score a matrix with the configured ORM method."""
    if params.method == "isolation-forest":
        return isolation_forest_scores(X, params, seed)
    return lof_scores(X, params.lof_k)
