"""L2-regularized logistic regression by full-batch gradient descent.

The step size is the inverse of a Lipschitz bound on the gradient, which
guarantees the loss is non-increasing at every iteration; training stops when
the loss delta falls below the tolerance or max_iter is hit.  The bias term
is not regularized.
"""

from __future__ import annotations

import numpy as np

__all__ = ["LogisticRegressionGD"]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticRegressionGD:
    def __init__(self, c=1.0, max_iter=5000, tol=1e-6):
        if c <= 0:
            raise ValueError("c must be > 0")
        self.c = float(c)
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.coef = None
        self.loss_history: list[float] = []

    def _loss(self, Xb, y, lam):
        z = Xb @ self.coef
        data = float(np.mean(np.logaddexp(0.0, z) - y * z))
        return data + 0.5 * lam * float(np.dot(self.coef[:-1], self.coef[:-1]))

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        Xb = np.hstack([X, np.ones((n, 1))])
        lam = 1.0 / (self.c * n)
        lipschitz = float(np.sum(Xb * Xb)) / (4.0 * n) + lam
        step = 1.0 / lipschitz
        self.coef = np.zeros(Xb.shape[1])
        self.loss_history = [self._loss(Xb, y, lam)]
        for _ in range(self.max_iter):
            p = _sigmoid(Xb @ self.coef)
            grad = Xb.T @ (p - y) / n
            grad[:-1] += lam * self.coef[:-1]
            self.coef = self.coef - step * grad
            loss = self._loss(Xb, y, lam)
            self.loss_history.append(loss)
            if abs(self.loss_history[-2] - loss) < self.tol:
                break
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coef[:-1] + self.coef[-1]

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)

    def state_dict(self) -> dict:
        return {
            "c": self.c,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "coef": self.coef.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "LogisticRegressionGD":
        model = cls(state["c"], state["max_iter"], state["tol"])
        model.coef = np.asarray(state["coef"], dtype=np.float64)
        return model
