"""Bagged forests and discrete boosting over depth-1 trees.

Per-tree RNG streams in the forest are keyed by tree index alone, so a forest
of m trees is exactly the first m trees of a larger forest with the same seed.
Boosting is sequential, so ensemble prefixes are likewise stable.  Both
properties let grid search over n_estimators reuse one fit per fold.
"""

from __future__ import annotations

import math

import numpy as np

from ._tree import DecisionTree

__all__ = ["RandomForest", "AdaBoostStumps"]


class RandomForest:
    """Bootstrap-bagged CART trees with sqrt-of-d feature subsampling per split.

    Majority vote over trees; an exact tie predicts label 0.
    """

    def __init__(self, n_estimators=100, max_depth=None, seed=0):
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.seed = int(seed)
        self.trees: list[DecisionTree] = []

    def _tree_rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(index,))
        )

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        max_features = min(d, math.ceil(math.sqrt(d)))
        self.trees = []
        for i in range(self.n_estimators):
            rng = self._tree_rng(i)
            boot = rng.integers(0, n, size=n)
            tree = DecisionTree(
                criterion="gini",
                max_depth=self.max_depth,
                max_features=max_features,
                rng=rng,
            )
            tree.fit(X[boot], y[boot])
            self.trees.append(tree)
        return self

    def predict_prefix(self, X, n_trees: int) -> np.ndarray:
        """Majority vote over the first n_trees trees (== a smaller forest's vote)."""
        votes = np.zeros(np.asarray(X).shape[0], dtype=np.int64)
        for tree in self.trees[:n_trees]:
            votes += tree.predict(X)
        return (2 * votes > min(n_trees, len(self.trees))).astype(np.int64)

    def predict(self, X) -> np.ndarray:
        return self.predict_prefix(X, len(self.trees))

    def state_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "trees": [t.state_dict() for t in self.trees],
        }

    @classmethod
    def from_state(cls, state: dict) -> "RandomForest":
        model = cls(state["n_estimators"], state["max_depth"], state["seed"])
        model.trees = [DecisionTree.from_state(s) for s in state["trees"]]
        return model


class AdaBoostStumps:
    """Discrete AdaBoost over depth-1 weighted-gini trees.

    A round whose stump has weighted training error >= 0.5 halts boosting; a
    perfect stump gets a capped weight and also halts.  The decision is the
    sign of the weighted vote, with ties going to label 0.
    """

    _EPS = 1e-12

    def __init__(self, n_estimators=50, seed=0):
        self.n_estimators = int(n_estimators)
        self.seed = int(seed)  # kept for interface uniformity; boosting is deterministic
        self.stumps: list[DecisionTree] = []
        self.alphas: list[float] = []
        self.fallback_label = 0
        self.stump_errors: list[float] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n = y.size
        w = np.full(n, 1.0 / n)
        self.stumps = []
        self.alphas = []
        self.stump_errors = []
        ones = int(np.count_nonzero(y == 1))
        self.fallback_label = 1 if 2 * ones > n else 0
        for _ in range(self.n_estimators):
            stump = DecisionTree(criterion="gini", max_depth=1)
            stump.fit(X, y, sample_weight=w)
            pred = stump.predict(X)
            miss = pred != y
            err = float(w[miss].sum())
            if err >= 0.5:
                break
            self.stump_errors.append(err)
            if err <= 0.0:
                self.stumps.append(stump)
                self.alphas.append(0.5 * math.log((1.0 - self._EPS) / self._EPS))
                break
            alpha = 0.5 * math.log((1.0 - err) / err)
            self.stumps.append(stump)
            self.alphas.append(alpha)
            w = w * np.exp(np.where(miss, alpha, -alpha))
            w = w / w.sum()
        return self

    def predict_prefix(self, X, n_stumps: int) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if not self.stumps:
            return np.full(X.shape[0], self.fallback_label, dtype=np.int64)
        score = np.zeros(X.shape[0])
        for stump, alpha in zip(self.stumps[:n_stumps], self.alphas[:n_stumps]):
            score += alpha * (2.0 * stump.predict(X) - 1.0)
        return (score > 0).astype(np.int64)

    def predict(self, X) -> np.ndarray:
        return self.predict_prefix(X, len(self.stumps))

    def state_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "seed": self.seed,
            "alphas": list(self.alphas),
            "fallback_label": self.fallback_label,
            "stumps": [s.state_dict() for s in self.stumps],
        }

    @classmethod
    def from_state(cls, state: dict) -> "AdaBoostStumps":
        model = cls(state["n_estimators"], state["seed"])
        model.alphas = list(state["alphas"])
        model.fallback_label = state["fallback_label"]
        model.stumps = [DecisionTree.from_state(s) for s in state["stumps"]]
        return model
