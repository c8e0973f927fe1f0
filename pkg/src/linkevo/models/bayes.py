from __future__ import annotations

import numpy as np

from .base import Classifier, Predictions, check_xy

VAR_FLOOR = 1e-9


class GaussianNaiveBayes(Classifier):
    kind = "naive_bayes"

    def fit(self, X, y):
        X, y = check_xy(X, y)
        self.means = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
        self.vars = np.array([np.maximum(X[y == c].var(axis=0), VAR_FLOOR) for c in (0, 1)])
        self.priors = np.array([np.mean(y == 0), np.mean(y == 1)])
        self.n_features = X.shape[1]
        return self

    def log_joint(self, X) -> np.ndarray:
        X = self._check_predict(X)
        out = np.empty((len(X), 2))
        for c in (0, 1):
            ll = -0.5 * (np.log(2.0 * np.pi * self.vars[c]) + (X - self.means[c]) ** 2 / self.vars[c])
            out[:, c] = np.log(self.priors[c]) + ll.sum(axis=1)
        return out

    def predict(self, X):
        lj = self.log_joint(X)
        p_pos = np.exp(lj[:, 1] - np.logaddexp(lj[:, 0], lj[:, 1]))
        return Predictions((lj[:, 1] > lj[:, 0]).astype(int), p_pos)

    def get_state(self):
        return {"means": self.means.tolist(), "vars": self.vars.tolist(), "priors": self.priors.tolist()}

    def set_state(self, state):
        self.means = np.array(state["means"], dtype=float)
        self.vars = np.array(state["vars"], dtype=float)
        self.priors = np.array(state["priors"], dtype=float)
        self.n_features = self.means.shape[1]
