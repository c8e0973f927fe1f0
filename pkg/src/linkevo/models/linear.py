"""Linear classifiers trained by full-batch (sub)gradient descent."""

from __future__ import annotations

import numpy as np

from .base import Classifier, Predictions, TrainConfig, check_xy


def sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, reg: float) -> float:
    """Mean log-loss plus ``reg / 2 * ||w||^2`` (intercept unpenalized)."""
    z = X @ w + b
    # log(1 + e^{-z}) for y = 1, log(1 + e^{z}) for y = 0
    losses = np.logaddexp(0.0, np.where(y == 1, -z, z))
    return float(losses.mean() + 0.5 * reg * (w @ w))


def logistic_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, reg: float) -> tuple[np.ndarray, float]:
    r = sigmoid(X @ w + b) - y
    n = len(y)
    return X.T @ r / n + reg * w, float(r.sum() / n)


class LogisticRegression(Classifier):
    kind = "logistic"

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.cfg
        w = np.zeros(X.shape[1])
        b = 0.0
        self.converged = False
        self.epochs_run = 0
        for t in range(1, cfg.epochs + 1):
            gw, gb = logistic_gradient(w, b, X, y, cfg.regularization_strength)
            if np.sqrt(gw @ gw + gb * gb) <= cfg.tolerance:
                self.converged = True
                break
            step = cfg.learning_rate / np.sqrt(t)
            w -= step * gw
            b -= step * gb
            self.epochs_run = t
        self.w, self.b = w, b
        self.n_features = X.shape[1]
        return self

    @property
    def linear_weights(self):
        return self.w, self.b

    def predict(self, X):
        X = self._check_predict(X)
        p = sigmoid(X @ self.w + self.b)
        return Predictions((p > 0.5).astype(int), p)

    def get_state(self):
        return {"w": self.w.tolist(), "b": self.b}

    def set_state(self, state):
        self.w = np.array(state["w"], dtype=float)
        self.b = float(state["b"])
        self.n_features = len(self.w)


def hinge_objective(w, b, X, y_pm, reg) -> float:
    margins = y_pm * (X @ w + b)
    return float(np.maximum(0.0, 1.0 - margins).mean() + 0.5 * reg * (w @ w))


class LinearSVM(Classifier):
    """L2-regularized hinge loss; keeps the best iterate seen."""

    kind = "linear_svm"

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.cfg
        y_pm = np.where(y == 1, 1.0, -1.0)
        n = len(y)
        w = np.zeros(X.shape[1])
        b = 0.0
        best = (hinge_objective(w, b, X, y_pm, cfg.regularization_strength), w.copy(), b)
        for t in range(1, cfg.epochs + 1):
            active = y_pm * (X @ w + b) < 1.0
            gw = cfg.regularization_strength * w - (y_pm[active] @ X[active]) / n
            gb = -y_pm[active].sum() / n
            step = cfg.learning_rate / np.sqrt(t)
            w = w - step * gw
            b = b - step * gb
            obj = hinge_objective(w, b, X, y_pm, cfg.regularization_strength)
            if obj < best[0]:
                best = (obj, w.copy(), b)
        self.objective, self.w, self.b = best
        self.n_features = X.shape[1]
        return self

    @property
    def linear_weights(self):
        return self.w, self.b

    def predict(self, X):
        X = self._check_predict(X)
        margin = X @ self.w + self.b
        return Predictions((margin > 0).astype(int), margin)

    def get_state(self):
        return {"w": self.w.tolist(), "b": self.b}

    def set_state(self, state):
        self.w = np.array(state["w"], dtype=float)
        self.b = float(state["b"])
        self.n_features = len(self.w)
