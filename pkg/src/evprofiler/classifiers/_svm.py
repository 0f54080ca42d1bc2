"""Soft-margin RBF SVM solved in the dual by sequential minimal optimization.

Working pairs are chosen by the maximal-violating-pair rule on the cached
gradient; argmax/argmin resolve ties to the lowest index, so the optimization
path is deterministic.  Terminates when the KKT violation gap drops below the
tolerance (default 1e-3) or the iteration cap is reached.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SVMClassifier"]

_TAU = 1e-12


def _rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SVMClassifier:
    def __init__(self, c=1.0, gamma=1e-3, tol=1e-3, max_iter=100_000):
        if c <= 0 or gamma <= 0:
            raise ValueError("c and gamma must be > 0")
        self.c = float(c)
        self.gamma = float(gamma)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.support_vectors = None
        self.dual_coef = None  # alpha_i * t_i over support vectors
        self.rho = 0.0
        self.n_iter = 0

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        t = np.where(np.asarray(y) == 1, 1.0, -1.0)
        n = X.shape[0]
        K = _rbf_kernel(X, X, self.gamma)
        Q = (t[:, None] * t[None, :]) * K

        alpha = np.zeros(n)
        grad = -np.ones(n)  # gradient of 1/2 a'Qa - e'a at a = 0
        C = self.c

        for it in range(self.max_iter):
            up = ((t > 0) & (alpha < C)) | ((t < 0) & (alpha > 0))
            low = ((t < 0) & (alpha < C)) | ((t > 0) & (alpha > 0))
            viol = -t * grad
            up_vals = np.where(up, viol, -np.inf)
            low_vals = np.where(low, viol, np.inf)
            i = int(np.argmax(up_vals))
            j = int(np.argmin(low_vals))
            if up_vals[i] - low_vals[j] < self.tol:
                break

            old_i, old_j = alpha[i], alpha[j]
            if t[i] != t[j]:
                quad = max(Q[i, i] + Q[j, j] + 2.0 * Q[i, j], _TAU)
                delta = (-grad[i] - grad[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0.0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0.0
                        alpha[j] = -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = C - diff
                else:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = C + diff
            else:
                quad = max(Q[i, i] + Q[j, j] - 2.0 * Q[i, j], _TAU)
                delta = (grad[i] - grad[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = total - C
                else:
                    if alpha[j] < 0:
                        alpha[j] = 0.0
                        alpha[i] = total
                if total > C:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = total - C
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0.0
                        alpha[j] = total

            grad += Q[:, i] * (alpha[i] - old_i) + Q[:, j] * (alpha[j] - old_j)
            self.n_iter = it + 1

        self.rho = self._compute_rho(alpha, t, grad, C)
        mask = alpha > 0
        self.support_vectors = X[mask]
        self.dual_coef = alpha[mask] * t[mask]
        return self

    @staticmethod
    def _compute_rho(alpha, t, grad, C):
        yg = t * grad
        free = (alpha > 0) & (alpha < C)
        if np.any(free):
            return float(yg[free].mean())
        upper = np.where(((alpha == 0) & (t > 0)) | ((alpha == C) & (t < 0)), yg, np.inf)
        lower = np.where(((alpha == 0) & (t < 0)) | ((alpha == C) & (t > 0)), yg, -np.inf)
        return float((upper.min() + lower.max()) / 2.0)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.dual_coef is None or self.dual_coef.size == 0:
            return np.full(X.shape[0], -self.rho)
        K = _rbf_kernel(X, self.support_vectors, self.gamma)
        return K @ self.dual_coef - self.rho

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)

    def state_dict(self) -> dict:
        return {
            "c": self.c,
            "gamma": self.gamma,
            "tol": self.tol,
            "rho": self.rho,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "SVMClassifier":
        model = cls(state["c"], state["gamma"], state["tol"])
        model.rho = state["rho"]
        model.support_vectors = np.asarray(state["support_vectors"], dtype=np.float64)
        model.dual_coef = np.asarray(state["dual_coef"], dtype=np.float64)
        return model
