"""Greedy binary CART for binary labels, with optional sample weights and
per-split random feature subsampling (used by the forest)."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["DecisionTree"]


def _gini(w0, w1):
    total = w0 + w1
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, 1.0 - (w0 * w0 + w1 * w1) / (safe * safe), 0.0)


def _entropy(w0, w1):
    total = w0 + w1
    safe = np.where(total > 0, total, 1.0)
    p0 = w0 / safe
    p1 = w1 / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        h0 = np.where(p0 > 0, -p0 * np.log2(np.where(p0 > 0, p0, 1.0)), 0.0)
        h1 = np.where(p1 > 0, -p1 * np.log2(np.where(p1 > 0, p1, 1.0)), 0.0)
    return np.where(total > 0, h0 + h1, 0.0)


_IMPURITY = {"gini": _gini, "entropy": _entropy}


class DecisionTree:
    """CART classifier: single-feature binary splits chosen by impurity decrease.

    Ties are broken deterministically: a split must be strictly better to
    replace the incumbent, features are scanned in ascending index order and
    thresholds in ascending value order.  Stops on purity, max_depth, or
    fewer than two samples.
    """

    def __init__(self, criterion="gini", max_depth=None, max_features=None, rng=None):
        if criterion not in _IMPURITY:
            raise ValueError(f"unknown criterion {criterion!r}")
        if max_features is not None and rng is None:
            raise ValueError("random feature subsampling requires an rng")
        self.criterion = criterion
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng
        self.root = None
        self.n_features = None

    def fit(self, X, y, sample_weight=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if sample_weight is None:
            w = np.full(y.size, 1.0 / y.size)
        else:
            w = np.asarray(sample_weight, dtype=np.float64)
        self.n_features = X.shape[1]
        self.root = self._build(X, y, w, np.arange(y.size), depth=0)
        return self

    def _leaf(self, w0: float, w1: float) -> dict:
        return {"leaf": 1 if w1 > w0 else 0}

    def _split_candidates(self):
        if self.max_features is None or self.max_features >= self.n_features:
            return np.arange(self.n_features)
        pick = self.rng.choice(self.n_features, size=self.max_features, replace=False)
        return np.sort(pick)

    def _build(self, X, y, w, idx, depth):
        wn = w[idx]
        yn = y[idx]
        W = float(wn.sum())
        W1 = float(wn[yn == 1].sum())
        W0 = W - W1
        impurity = _IMPURITY[self.criterion]
        parent_imp = float(impurity(np.float64(W0), np.float64(W1)))
        if (
            parent_imp == 0.0
            or idx.size < 2
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return self._leaf(W0, W1)

        best_gain = 0.0
        best = None
        for f in self._split_candidates():
            xv = X[idx, f]
            order = np.argsort(xv, kind="stable")
            xs = xv[order]
            ys = yn[order]
            ws = wn[order]
            cut = np.nonzero(xs[:-1] < xs[1:])[0]
            if cut.size == 0:
                continue
            w_cum = np.cumsum(ws)
            w1_cum = np.cumsum(ws * ys)
            wl = w_cum[cut]
            wl1 = w1_cum[cut]
            wl0 = wl - wl1
            wr1 = W1 - wl1
            wr0 = W0 - wl0
            child = (wl * impurity(wl0, wl1) + (W - wl) * impurity(wr0, wr1)) / W
            gains = parent_imp - child
            j = int(np.argmax(gains))
            if gains[j] > best_gain:
                best_gain = float(gains[j])
                pos = cut[j]
                best = (int(f), float((xs[pos] + xs[pos + 1]) / 2.0))
        if best is None:
            return self._leaf(W0, W1)

        feature, threshold = best
        left = idx[X[idx, feature] <= threshold]
        right = idx[X[idx, feature] > threshold]
        return {
            "f": feature,
            "thr": threshold,
            "lo": self._build(X, y, w, left, depth + 1),
            "hi": self._build(X, y, w, right, depth + 1),
        }

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0], dtype=np.int64)
        self._apply(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _apply(self, node, X, idx, out):
        if idx.size == 0:
            return
        if "leaf" in node:
            out[idx] = node["leaf"]
            return
        mask = X[idx, node["f"]] <= node["thr"]
        self._apply(node["lo"], X, idx[mask], out)
        self._apply(node["hi"], X, idx[~mask], out)

    @property
    def depth(self) -> int:
        def walk(node):
            if "leaf" in node:
                return 0
            return 1 + max(walk(node["lo"]), walk(node["hi"]))

        return walk(self.root) if self.root is not None else 0

    def state_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "n_features": self.n_features,
            "root": self.root,
        }

    @classmethod
    def from_state(cls, state: dict) -> "DecisionTree":
        tree = cls(criterion=state["criterion"], max_depth=state["max_depth"])
        tree.n_features = state["n_features"]
        tree.root = state["root"]
        return tree
