"""Six binary classifiers behind one fit/predict surface.

``fit`` runs grid-search cross-validation over the model's hyper-parameter
grid (the published defaults live in DEFAULT_GRIDS), refits the winner on the
full training set, and returns a TrainedModel.  Identical (data, seed) pairs
produce identical models and predictions for every kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._ensemble import AdaBoostStumps, RandomForest
from ._gridsearch import (
    binary_f1,
    enumerate_grid,
    grid_search,
    model_seed_for,
    stratified_fold_assignment,
)
from ._knn import KNeighbors
from ._linear import LogisticRegressionGD
from ._svm import SVMClassifier
from ._tree import DecisionTree

__all__ = [
    "MODEL_KINDS",
    "DEFAULT_GRIDS",
    "TrainedModel",
    "fit",
    "predict",
    "binary_f1",
    "enumerate_grid",
    "stratified_fold_assignment",
    "KNeighbors",
    "DecisionTree",
    "LogisticRegressionGD",
    "SVMClassifier",
    "RandomForest",
    "AdaBoostStumps",
]

MODEL_KINDS = ("svm", "knn", "dt", "lr", "rf", "ada")

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "svm": {
        "kernel": ["rbf"],
        "c": [1.0, 10.0, 100.0, 1000.0],
        "gamma": [1e-4, 1e-3],
    },
    "knn": {
        "n_neighbors": list(range(1, 11)),
        "weights": ["uniform", "distance"],
        "metric": ["euclidean", "manhattan"],
    },
    "dt": {
        "criterion": ["gini", "entropy"],
        "max_depth": [8, 10, 14, 30, 70, 110],
    },
    "lr": {
        "max_iter": [5000],
        "c": [1e-2, 1.0, 1e2],
    },
    "rf": {
        "n_estimators": [50, 200, 1000],
        "max_depth": [10, 100, None],
    },
    "ada": {
        "n_estimators": [10, 100, 500, 1000, 5000],
    },
}


def _build_svm(params: Mapping, seed: int) -> SVMClassifier:
    if params.get("kernel", "rbf") != "rbf":
        raise ValueError(f"unsupported kernel {params.get('kernel')!r}")
    return SVMClassifier(c=params["c"], gamma=params["gamma"])


def _build_knn(params: Mapping, seed: int) -> KNeighbors:
    return KNeighbors(
        n_neighbors=params["n_neighbors"],
        weights=params["weights"],
        metric=params["metric"],
    )


def _build_dt(params: Mapping, seed: int) -> DecisionTree:
    return DecisionTree(criterion=params["criterion"], max_depth=params["max_depth"])


def _build_lr(params: Mapping, seed: int) -> LogisticRegressionGD:
    return LogisticRegressionGD(c=params["c"], max_iter=params["max_iter"])


def _build_rf(params: Mapping, seed: int) -> RandomForest:
    return RandomForest(
        n_estimators=params["n_estimators"], max_depth=params["max_depth"], seed=seed
    )


def _build_ada(params: Mapping, seed: int) -> AdaBoostStumps:
    return AdaBoostStumps(n_estimators=params["n_estimators"], seed=seed)


_BUILDERS = {
    "svm": _build_svm,
    "knn": _build_knn,
    "dt": _build_dt,
    "lr": _build_lr,
    "rf": _build_rf,
    "ada": _build_ada,
}

_MODEL_CLASSES = {
    "svm": SVMClassifier,
    "knn": KNeighbors,
    "dt": DecisionTree,
    "lr": LogisticRegressionGD,
    "rf": RandomForest,
    "ada": AdaBoostStumps,
}


@dataclass
class TrainedModel:
    """A fitted classifier plus the grid choice that produced it."""

    kind: str
    params: dict
    model: object
    seed: int
    n_features: int
    cv_scores: tuple = field(default=(), repr=False)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        labels = self.model.predict(X)
        return labels[0] if single else labels

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "seed": self.seed,
            "n_features": self.n_features,
            "state": self.model.state_dict(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "TrainedModel":
        model = _MODEL_CLASSES[state["kind"]].from_state(state["state"])
        return cls(
            kind=state["kind"],
            params=state["params"],
            model=model,
            seed=state["seed"],
            n_features=state["n_features"],
        )


def fit(
    kind: str,
    X,
    y,
    grid: Mapping[str, Sequence] | None = None,
    folds: int = 3,
    seed: int = 0,
) -> TrainedModel:
    """Grid-search CV on the training set, then refit the winner on all of it."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be 2-D with one label per row")
    if np.unique(y).size < 2:
        raise ValueError("training set must contain both classes")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    grid = grid if grid is not None else DEFAULT_GRIDS[kind]
    mseed = model_seed_for(seed)
    builder = _BUILDERS[kind]
    best_params, results = grid_search(
        kind, lambda params: builder(params, mseed), grid, X, y, folds, seed
    )
    model = builder(best_params, mseed)
    model.fit(X, y)
    return TrainedModel(
        kind=kind,
        params=best_params,
        model=model,
        seed=seed,
        n_features=X.shape[1],
        cv_scores=tuple((dict(p), s) for p, s in results),
    )


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)
