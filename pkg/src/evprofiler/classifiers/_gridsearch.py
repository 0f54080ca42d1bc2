"""Stratified grid-search cross-validation scored by positive-class F1.

Grid points are enumerated in the order the grid dict lists its parameters
and values; ties on mean validation F1 resolve to the earliest point, so the
chosen hyper-parameters are reproducible.  kNN, forest, and boosting get
fast paths (shared neighbour sorts / prefix ensembles) that produce scores
identical to the generic per-point loop.
"""

from __future__ import annotations

import itertools
import warnings
from typing import Mapping, Sequence

import numpy as np

from ._knn import KNeighbors, knn_vote, pairwise_distances

__all__ = [
    "binary_f1",
    "enumerate_grid",
    "stratified_fold_assignment",
    "grid_search",
]


def binary_f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """F1 of the positive class; 0 when precision + recall is 0."""
    tp = int(np.count_nonzero((y_true == 1) & (y_pred == 1)))
    fp = int(np.count_nonzero((y_true == 0) & (y_pred == 1)))
    fn = int(np.count_nonzero((y_true == 1) & (y_pred == 0)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def enumerate_grid(grid: Mapping[str, Sequence]) -> list[dict]:
    """Cartesian product of the grid in declared parameter/value order."""
    keys = list(grid)
    points = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        points.append(dict(zip(keys, combo)))
    return points


def stratified_fold_assignment(y: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Per-row fold index; each class is shuffled then dealt round-robin."""
    fold_of = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        idx = np.nonzero(y == cls)[0]
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(perm.size) % n_folds
    return fold_of


def _fold_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))


def model_seed_for(seed: int) -> int:
    """Seed handed to every candidate model (and the final refit)."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(1,)).generate_state(1)[0])


def _score_generic(build, points, X, y, fold_of, n_folds) -> list[float]:
    scores = [0.0] * len(points)
    for p_idx, params in enumerate(points):
        total = 0.0
        for fold in range(n_folds):
            val = fold_of == fold
            model = build(params)
            model.fit(X[~val], y[~val])
            total += binary_f1(y[val], model.predict(X[val]))
        scores[p_idx] = total / n_folds
    return scores


def _score_knn(points, X, y, fold_of, n_folds) -> list[float]:
    """Shared-distance scoring: one sort per (fold, metric) serves every
    (n_neighbors, weights) combination through the same vote kernel."""
    scores = [0.0] * len(points)
    for fold in range(n_folds):
        val = fold_of == fold
        Xtr, ytr = X[~val], y[~val]
        Xva, yva = X[val], y[val]
        by_metric = {}
        for metric in {p["metric"] for p in points}:
            D = pairwise_distances(Xva, Xtr, metric)
            order = np.argsort(D, axis=1, kind="stable")
            by_metric[metric] = (ytr[order], np.take_along_axis(D, order, axis=1))
        for p_idx, params in enumerate(points):
            labels_sorted, dists_sorted = by_metric[params["metric"]]
            pred = knn_vote(labels_sorted, dists_sorted, params["n_neighbors"], params["weights"])
            scores[p_idx] += binary_f1(yva, pred)
    return [s / n_folds for s in scores]


def _score_prefix_ensemble(build_full, points, count_key, X, y, fold_of, n_folds) -> list[float]:
    """Scoring for ensembles whose n-estimator prefixes equal smaller fits."""
    scores = [0.0] * len(points)
    base_of = []
    for params in points:
        base = dict(params)
        base.pop(count_key)
        base_of.append(tuple(sorted(base.items(), key=lambda kv: kv[0])))
    max_count = {}
    for params, base in zip(points, base_of):
        max_count[base] = max(max_count.get(base, 0), params[count_key])
    for fold in range(n_folds):
        val = fold_of == fold
        fitted = {}
        for base, count in max_count.items():
            model = build_full(dict(base), count)
            model.fit(X[~val], y[~val])
            fitted[base] = model
        for p_idx, (params, base) in enumerate(zip(points, base_of)):
            pred = fitted[base].predict_prefix(X[val], params[count_key])
            scores[p_idx] += binary_f1(y[val], pred)
    return [s / n_folds for s in scores]


def grid_search(
    kind: str,
    build,
    grid: Mapping[str, Sequence],
    X: np.ndarray,
    y: np.ndarray,
    folds: int,
    seed: int,
    fast: bool = True,
) -> tuple[dict, list[tuple[dict, float]]]:
    """Pick the grid point maximizing mean validation F1 over stratified folds.

    Returns (best_params, [(params, mean_f1), ...] in enumeration order).
    Folds are reduced (with a warning) when the minority class cannot populate
    them; with fewer than 2 usable folds the first grid point wins by default.
    """
    points = enumerate_grid(grid)
    if not points:
        raise ValueError("empty hyper-parameter grid")
    minority = min(int(np.count_nonzero(y == 0)), int(np.count_nonzero(y == 1)))
    n_folds = min(folds, minority)
    if n_folds < folds:
        warnings.warn(
            f"reducing folds {folds} -> {n_folds}: minority class has {minority} samples",
            stacklevel=2,
        )
    if n_folds < 2:
        return points[0], [(p, 0.0) for p in points]

    fold_of = stratified_fold_assignment(y, n_folds, _fold_rng(seed))
    if fast and kind == "knn":
        scores = _score_knn(points, X, y, fold_of, n_folds)
    elif fast and kind in ("rf", "ada"):
        scores = _score_prefix_ensemble(
            lambda base, count: build({**base, "n_estimators": count}),
            points,
            "n_estimators",
            X,
            y,
            fold_of,
            n_folds,
        )
    else:
        scores = _score_generic(build, points, X, y, fold_of, n_folds)
    best = int(np.argmax(scores))
    return points[best], list(zip(points, scores))
