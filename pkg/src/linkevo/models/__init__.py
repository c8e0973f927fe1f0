"""Classifier suite behind one fit/predict contract.

>>> model = fit("logistic", X, y, TrainConfig(seed=1))
>>> preds = predict(model, X_test)
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .base import Classifier, ModelError, Prediction, Predictions, TrainConfig, check_xy
from .bayes import GaussianNaiveBayes
from .kernel import KernelSVM
from .linear import LinearSVM, LogisticRegression, logistic_gradient, logistic_loss
from .neighbors import KNearestNeighbors
from .tree import DecisionTree, RandomForest

FORMAT_NAME = "linkevo-model"
FORMAT_VERSION = 1

BASE_KINDS = ("linear_svm", "logistic", "knn", "random_forest", "naive_bayes", "rbf_svm")
ALL_KINDS = BASE_KINDS + ("ensemble",)

_REGISTRY: dict[str, type[Classifier]] = {
    "logistic": LogisticRegression,
    "linear_svm": LinearSVM,
    "knn": KNearestNeighbors,
    "naive_bayes": GaussianNaiveBayes,
    "random_forest": RandomForest,
    "rbf_svm": KernelSVM,
    "tree": DecisionTree,
}

DISPLAY_NAMES = {
    "linear_svm": "SVM",
    "logistic": "Logistic regression",
    "knn": "k-NN",
    "random_forest": "Random forests",
    "naive_bayes": "Naive-Bayes",
    "rbf_svm": "SVM- RBF Kernel",
    "ensemble": "Ensemble of Classifiers",
}


class MajorityVoteEnsemble(Classifier):
    """Unweighted vote over the base models; a tie is a negative."""

    kind = "ensemble"

    def __init__(self, cfg: TrainConfig = TrainConfig(), members=BASE_KINDS):
        super().__init__(cfg)
        self.members = tuple(members)

    @classmethod
    def from_members(cls, models, cfg: TrainConfig = TrainConfig()) -> "MajorityVoteEnsemble":
        """Wrap already-fitted members instead of refitting them."""
        ens = cls(cfg, [m.kind for m in models])
        ens.models = list(models)
        ens.n_features = models[0].n_features
        return ens

    def fit(self, X, y):
        X, y = check_xy(X, y)
        self.models = [make(kind, self.cfg).fit(X, y) for kind in self.members]
        self.n_features = X.shape[1]
        return self

    def votes(self, X) -> np.ndarray:
        X = self._check_predict(X)
        return np.array([m.predict(X).labels for m in self.models])

    def predict(self, X):
        v = self.votes(X)
        pos = v.sum(axis=0)
        return Predictions((2 * pos > len(self.models)).astype(int), pos / len(self.models))

    def get_state(self):
        return {"members": [_to_dict(m) for m in self.models]}

    def set_state(self, state):
        self.models = [_from_dict(d) for d in state["members"]]
        self.members = tuple(m.kind for m in self.models)
        self.n_features = self.models[0].n_features


_REGISTRY["ensemble"] = MajorityVoteEnsemble


def make(kind: str, cfg: TrainConfig = TrainConfig()) -> Classifier:
    try:
        return _REGISTRY[kind](cfg)
    except KeyError:
        raise ModelError(f"unknown classifier {kind!r}; choose from {sorted(_REGISTRY)}") from None


def fit(kind: str, X, y, cfg: TrainConfig = TrainConfig()) -> Classifier:
    return make(kind, cfg).fit(X, y)


def predict(model: Classifier, X) -> Predictions:
    return model.predict(X)


def _to_dict(model: Classifier) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": model.kind,
        "n_features": model.n_features,
        "config": model.cfg.to_dict(),
        "state": model.get_state(),
    }


def _from_dict(d: dict) -> Classifier:
    if d.get("format") != FORMAT_NAME:
        raise ModelError("not a serialized model")
    if d.get("version") != FORMAT_VERSION:
        raise ModelError(f"unsupported model format version {d.get('version')!r}")
    model = make(d["kind"], TrainConfig.from_dict(d["config"]))
    model.set_state(d["state"])
    if model.n_features != d["n_features"]:
        raise ModelError("serialized dimensions are inconsistent")
    return model


def model_to_dict(model: Classifier) -> dict:
    return _to_dict(model)


def model_from_dict(d: dict) -> Classifier:
    return _from_dict(d)


def save_model(model: Classifier, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(_to_dict(model), f)


def load_model(path: str | Path) -> Classifier:
    with open(path) as f:
        return _from_dict(json.load(f))


__all__ = [
    "ALL_KINDS", "BASE_KINDS", "Classifier", "DecisionTree", "DISPLAY_NAMES", "GaussianNaiveBayes",
    "KNearestNeighbors", "KernelSVM", "LinearSVM", "LogisticRegression", "MajorityVoteEnsemble",
    "ModelError", "Prediction", "Predictions", "RandomForest", "TrainConfig", "fit", "load_model",
    "logistic_gradient", "logistic_loss", "make", "model_from_dict", "model_to_dict", "predict", "save_model",
]
