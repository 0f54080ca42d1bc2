"""Exact k-nearest-neighbours voting with pinned tie-breaking.

Neighbour order is (distance, training index) lexicographic, so equidistant
points resolve to the lower index.  Vote ties resolve to label 0.  With
distance weighting, zero-distance neighbours carry infinite weight: when any
are present the vote is restricted to them.
"""

from __future__ import annotations

import numpy as np

__all__ = ["KNeighbors", "pairwise_distances", "knn_vote"]

_CHUNK = 256


def pairwise_distances(A, B, metric: str) -> np.ndarray:
    """Distances between rows of A (queries) and rows of B (training)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    for start in range(0, A.shape[0], _CHUNK):
        block = A[start : start + _CHUNK, None, :] - B[None, :, :]
        if metric == "euclidean":
            out[start : start + _CHUNK] = np.sqrt((block * block).sum(axis=2))
        elif metric == "manhattan":
            out[start : start + _CHUNK] = np.abs(block).sum(axis=2)
        else:
            raise ValueError(f"unknown metric {metric!r}")
    return out


def knn_vote(labels_sorted: np.ndarray, dists_sorted: np.ndarray, k: int, weights: str) -> np.ndarray:
    """Vote over the first k columns of neighbour labels/distances sorted by
    (distance, index).  Shared by predict() and the grid-search fast path."""
    k = min(k, labels_sorted.shape[1])
    labels_k = labels_sorted[:, :k]
    if weights == "uniform":
        votes1 = labels_k.sum(axis=1)
        return (2 * votes1 > k).astype(np.int64)
    if weights != "distance":
        raise ValueError(f"unknown weights {weights!r}")
    dists_k = dists_sorted[:, :k]
    zero = dists_k == 0.0
    with np.errstate(divide="ignore"):
        w = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, dists_k))
    w1 = (w * labels_k).sum(axis=1)
    w_total = w.sum(axis=1)
    pred = (2 * w1 > w_total).astype(np.int64)
    has_zero = zero.any(axis=1)
    if np.any(has_zero):
        z1 = (zero & (labels_k == 1)).sum(axis=1)
        z_total = zero.sum(axis=1)
        pred[has_zero] = (2 * z1[has_zero] > z_total[has_zero]).astype(np.int64)
    return pred


class KNeighbors:
    def __init__(self, n_neighbors=5, weights="uniform", metric="euclidean"):
        self.n_neighbors = int(n_neighbors)
        self.weights = weights
        self.metric = metric
        self.X = None
        self.y = None

    def fit(self, X, y):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        return self

    def predict(self, X) -> np.ndarray:
        D = pairwise_distances(X, self.X, self.metric)
        order = np.argsort(D, axis=1, kind="stable")
        return knn_vote(
            self.y[order],
            np.take_along_axis(D, order, axis=1),
            self.n_neighbors,
            self.weights,
        )

    def state_dict(self) -> dict:
        return {
            "n_neighbors": self.n_neighbors,
            "weights": self.weights,
            "metric": self.metric,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "KNeighbors":
        model = cls(state["n_neighbors"], state["weights"], state["metric"])
        model.X = np.asarray(state["X"], dtype=np.float64)
        model.y = np.asarray(state["y"], dtype=np.int64)
        return model
