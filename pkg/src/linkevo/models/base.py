from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the classifier suite.

    ``rbf_gamma=None`` means ``1 / n_features``.  ``rbf_epochs`` counts passes
    of the kernel SVM's stochastic updates over the training set.
    """

    learning_rate: float = 0.1
    epochs: int = 500
    regularization_strength: float = 1e-3
    k_neighbors: int = 5
    tree_count: int = 100
    max_depth: int | None = 10
    max_features: str | int | None = "sqrt"
    bootstrap: bool = True
    rbf_gamma: float | None = None
    rbf_epochs: int = 5
    tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("learning_rate", "epochs", "k_neighbors", "tree_count", "rbf_epochs", "tolerance"):
            if getattr(self, name) <= 0:
                raise ModelError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.regularization_strength < 0:
            raise ModelError("regularization_strength must be non-negative")
        if self.max_depth is not None and self.max_depth < 1:
            raise ModelError("max_depth must be >= 1 or None")
        if self.rbf_gamma is not None and self.rbf_gamma <= 0:
            raise ModelError("rbf_gamma must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ModelError(f"unknown training options {sorted(unknown)}")
        return cls(**d)


class Prediction(NamedTuple):
    label: int
    score: float


@dataclass
class Predictions:
    """Labels (1 = positive, 0 = negative) and the score each label was thresholded from."""

    labels: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        for lab, sc in zip(self.labels, self.scores):
            yield Prediction(int(lab), float(sc))


def check_xy(X, y, need_both: bool = True) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ModelError(f"training matrix must be 2-D with at least one row, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ModelError("training matrix has non-finite entries")
    y = np.asarray(y).astype(int).ravel()
    if len(y) != X.shape[0]:
        raise ModelError(f"{X.shape[0]} rows but {len(y)} labels")
    if len(y) < 2:
        raise ModelError("need at least 2 training examples")
    if not set(np.unique(y)) <= {0, 1}:
        raise ModelError("labels must be 0/1")
    if need_both and len(np.unique(y)) < 2:
        raise ModelError("training labels contain a single class")
    return X, y


class Classifier:
    kind: str = ""

    def __init__(self, cfg: TrainConfig = TrainConfig()):
        self.cfg = cfg
        self.n_features: int | None = None

    @property
    def linear_weights(self) -> tuple[np.ndarray, float] | None:
        return None

    def _check_predict(self, X) -> np.ndarray:
        if self.n_features is None:
            raise ModelError(f"{self.kind} model is not fitted")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ModelError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def fit(self, X, y) -> "Classifier":
        raise NotImplementedError

    def predict(self, X) -> Predictions:
        raise NotImplementedError

    def get_state(self) -> dict:
        raise NotImplementedError

    def set_state(self, state: dict) -> None:
        raise NotImplementedError
