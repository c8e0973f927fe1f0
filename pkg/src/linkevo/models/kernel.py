from __future__ import annotations

import numpy as np

from .base import Classifier, Predictions, check_xy


class KernelSVM(Classifier):
    """RBF-kernel SVM trained with kernelized Pegasos (no bias term).

    After ``T`` stochastic steps the decision function is
    ``f(x) = 1/(lambda T) * sum_j alpha_j y_j K(x_j, x)`` where ``alpha_j``
    counts the steps on which example ``j`` violated the margin.
    """

    kind = "rbf_svm"

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.cfg
        n, m = X.shape
        self.gamma = cfg.rbf_gamma if cfg.rbf_gamma is not None else 1.0 / m
        lam = max(cfg.regularization_strength, 1e-12)
        y_pm = np.where(y == 1, 1.0, -1.0)
        rng = np.random.default_rng(cfg.seed)
        alpha = np.zeros(n)
        support: list[int] = []
        # coef[s] = alpha * y for the s-th support vector, in insertion order
        coef = np.zeros(n)
        pos_of = np.full(n, -1)
        sq = (X * X).sum(axis=1)
        T = cfg.rbf_epochs * n
        for t, i in enumerate(rng.integers(0, n, T), start=1):
            if support:
                S = np.asarray(support)
                k = np.exp(-self.gamma * np.maximum(sq[S] - 2.0 * X[S] @ X[i] + sq[i], 0.0))
                f = (coef[: len(support)] @ k) / (lam * t)
            else:
                f = 0.0
            if y_pm[i] * f < 1.0:
                alpha[i] += 1
                if pos_of[i] < 0:
                    pos_of[i] = len(support)
                    support.append(i)
                coef[pos_of[i]] += y_pm[i]
        keep = alpha > 0
        self.support_vectors = X[keep]
        self.dual_coef = (alpha * y_pm)[keep] / (lam * T)
        self.n_features = m
        return self

    def decision_function(self, X) -> np.ndarray:
        X = self._check_predict(X)
        if len(self.dual_coef) == 0:
            return np.zeros(len(X))
        sv = self.support_vectors
        d2 = (X * X).sum(1)[:, None] - 2.0 * X @ sv.T + (sv * sv).sum(1)[None, :]
        return np.exp(-self.gamma * np.maximum(d2, 0.0)) @ self.dual_coef

    def predict(self, X):
        f = self.decision_function(X)
        return Predictions((f > 0).astype(int), f)

    def get_state(self):
        return {"gamma": self.gamma, "support_vectors": self.support_vectors.tolist(),
                "dual_coef": self.dual_coef.tolist(), "n_features": self.n_features}

    def set_state(self, state):
        self.gamma = float(state["gamma"])
        self.n_features = int(state["n_features"])
        self.support_vectors = np.array(state["support_vectors"], dtype=float).reshape(-1, self.n_features)
        self.dual_coef = np.array(state["dual_coef"], dtype=float)
