"""Gini CART trees and a bagged random forest."""

from __future__ import annotations

import math

import numpy as np

from .base import Classifier, ModelError, Predictions, TrainConfig, check_xy

LEAF = -1


def _n_features_to_try(max_features, m: int) -> int:
    if max_features is None:
        return m
    if max_features == "sqrt":
        return max(1, int(math.sqrt(m)))
    if max_features == "log2":
        return max(1, int(math.log2(m)))
    if isinstance(max_features, int) and max_features >= 1:
        return min(m, max_features)
    raise ModelError(f"bad max_features {max_features!r}")


def _best_split(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Lowest weighted Gini over thresholds of one feature: (impurity, threshold)."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    valid = np.flatnonzero(xs[1:] > xs[:-1])          # split after position i
    if len(valid) == 0:
        return np.inf, 0.0
    pos_left = np.cumsum(ys)[valid]
    n_left = valid + 1
    n_right = n - n_left
    pos_right = ys.sum() - pos_left
    p_l = pos_left / n_left
    p_r = pos_right / n_right
    gini = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
    best = int(np.argmin(gini))
    i = valid[best]
    mid = (xs[i] + xs[i + 1]) / 2.0
    # adjacent floats can round the midpoint up onto the right value, emptying that side
    return float(gini[best]), float(mid if mid < xs[i + 1] else xs[i])


class DecisionTree(Classifier):
    kind = "tree"

    def __init__(self, cfg: TrainConfig = TrainConfig(), max_depth=None, max_features=None, rng=None,
                 min_samples_split: int = 2):
        super().__init__(cfg)
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    def fit(self, X, y):
        X, y = check_xy(X, y, need_both=False)
        n, m = X.shape
        n_try = _n_features_to_try(self.max_features, m)
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(float(y[idx].mean()))
            return len(feature) - 1

        stack = [(new_node(np.arange(n)), np.arange(n), 0)]
        while stack:
            node, idx, depth = stack.pop()
            yy = y[idx]
            p = yy.mean()
            if (len(idx) < self.min_samples_split or p in (0.0, 1.0)
                    or (self.max_depth is not None and depth >= self.max_depth)):
                continue
            parent = 2 * p * (1 - p)
            cand = self.rng.permutation(m)[:n_try] if n_try < m else np.arange(m)
            best = (parent, None, 0.0)
            for f in cand:
                g, thr = _best_split(X[idx, f], yy)
                if g < best[0] - 1e-12:
                    best = (g, int(f), thr)
            if best[1] is None:
                continue
            f, thr = best[1], best[2]
            mask = X[idx, f] <= thr
            li, ri = idx[mask], idx[~mask]
            feature[node], threshold[node] = f, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))
        self.feature = np.array(feature, dtype=int)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.value = np.array(value, dtype=float)
        self.n_features = m
        return self

    def leaf_values(self, X) -> np.ndarray:
        X = self._check_predict(X)
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f != LEAF
            if not inner.any():
                break
            go_left = X[rows[inner], f[inner]] <= self.threshold[node[inner]]
            node[inner] = np.where(go_left, self.left[node[inner]], self.right[node[inner]])
        return self.value[node]

    def predict(self, X):
        v = self.leaf_values(X)
        return Predictions((v > 0.5).astype(int), v)

    def get_state(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")} | {
            "n_features": self.n_features}

    def set_state(self, state):
        for k, dtype in (("feature", int), ("threshold", float), ("left", int), ("right", int), ("value", float)):
            setattr(self, k, np.array(state[k], dtype=dtype))
        self.n_features = int(state["n_features"])


class RandomForest(Classifier):
    """Bootstrap-bagged CART trees with per-node feature subsampling; scores are mean leaf frequencies."""

    kind = "random_forest"

    def fit(self, X, y):
        X, y = check_xy(X, y)
        cfg = self.cfg
        n = len(y)
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.tree_count)
        self.trees = []
        for ss in seeds:
            rng = np.random.default_rng(ss)
            idx = rng.integers(0, n, n) if cfg.bootstrap else np.arange(n)
            tree = DecisionTree(cfg, cfg.max_depth, cfg.max_features, rng)
            self.trees.append(tree.fit(X[idx], y[idx]))
        self.n_features = X.shape[1]
        return self

    def predict(self, X):
        X = self._check_predict(X)
        score = np.mean([t.leaf_values(X) for t in self.trees], axis=0)
        return Predictions((score > 0.5).astype(int), score)

    def get_state(self):
        return {"trees": [t.get_state() for t in self.trees], "n_features": self.n_features}

    def set_state(self, state):
        self.trees = []
        for ts in state["trees"]:
            t = DecisionTree(self.cfg)
            t.set_state(ts)
            self.trees.append(t)
        self.n_features = int(state["n_features"])
