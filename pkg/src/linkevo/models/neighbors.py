from __future__ import annotations

import numpy as np

from .base import Classifier, Predictions, check_xy


class KNearestNeighbors(Classifier):
    """Euclidean k-NN majority vote.  Distance ties go to the lower training row;
    vote ties go to the negative class."""

    kind = "knn"

    def fit(self, X, y):
        X, y = check_xy(X, y, need_both=False)
        self.X, self.y = X.copy(), y.copy()
        self.n_features = X.shape[1]
        return self

    def neighbors(self, X) -> np.ndarray:
        X = self._check_predict(X)
        k = min(self.cfg.k_neighbors, len(self.y))
        out = np.empty((len(X), k), dtype=int)
        chunk = max(1, 2_000_000 // max(1, self.X.size))
        for start in range(0, len(X), chunk):
            diff = X[start:start + chunk, None, :] - self.X[None, :, :]
            d2 = np.einsum("qnd,qnd->qn", diff, diff)
            out[start:start + chunk] = np.argsort(d2, axis=1, kind="stable")[:, :k]
        return out

    def predict(self, X):
        idx = self.neighbors(X)
        k = idx.shape[1]
        pos = self.y[idx].sum(axis=1)
        return Predictions((2 * pos > k).astype(int), pos / k)

    def get_state(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    def set_state(self, state):
        self.X = np.array(state["X"], dtype=float)
        self.y = np.array(state["y"], dtype=int)
        self.n_features = self.X.shape[1]
