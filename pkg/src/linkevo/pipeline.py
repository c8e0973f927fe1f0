"""End-to-end runs: input files -> networks -> datasets -> eigenfeatures -> classifiers -> reports."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .attributes import AgreementConfig, AttributeSchema, ProfileTable, default_schema, load_schema, read_profiles
from .dataset import FORMATION, PERSISTENCE, LabeledDataset, SplitDataset, build_task_dataset, split
from .evaluation import (ClassStats, CommStats, MetricRow, ReportStats, comm_stats, edge_class_stats,
                         feature_set_label, metrics)
from .graphcore import Snapshot
from .ingest import (ContactRecord, Nomination, SemesterCalendar, academic_calendar, attach_contact_weights,
                     build_activity_network, build_friendship_network, parse_contact_log, parse_nominations,
                     participants_from_profiles)
from .models import ALL_KINDS, BASE_KINDS, Classifier, MajorityVoteEnsemble, TrainConfig, make
from .models import model_from_dict, model_to_dict
from .spectral import (FeatureRanking, Standardization, SvdFactors, fit_standardization, project,
                       rank_correlation, rank_features, svd)

log = logging.getLogger(__name__)

INPUT_FILES = {"contacts": "contacts.csv", "profiles": "profiles.csv", "nominations": "nominations.csv"}
SCHEMA_FILE = "schema.json"
NETWORKS = ("activity", "friendship")
TASKS = (FORMATION, PERSISTENCE)


class ConfigError(ValueError):
    """A bad configuration value; ``field`` names the offending option."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    task: str = FORMATION
    network: str = "activity"
    max_hops: int | None = 2
    k_values: tuple[int, ...] = (2, 15, 28)
    classifiers: tuple[str, ...] = ALL_KINDS
    ranking_classifier: str = "logistic"
    train_fraction: float = 0.8
    seed: int = 0
    threshold: int = 5
    friendship_rule: str = "either"
    n_semesters: int = 4
    start_year: int = 2011
    missing_value: float = 0.5
    total_mode: str = "soft"
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError("task", f"must be one of {list(TASKS)}, got {self.task!r}")
        if self.network not in NETWORKS:
            raise ConfigError("network", f"must be one of {list(NETWORKS)}, got {self.network!r}")
        if self.max_hops is not None and self.max_hops < 2:
            raise ConfigError("max_hops", "must be >= 2 (or null for every non-forming pair)")
        if any(k < 1 for k in self.k_values):
            raise ConfigError("k_values", "every k must be >= 1")
        if len(set(self.k_values)) != len(self.k_values):
            raise ConfigError("k_values", "duplicate k")
        if not self.classifiers:
            raise ConfigError("classifiers", "need at least one classifier")
        for c in self.classifiers:
            if c not in ALL_KINDS:
                raise ConfigError("classifiers", f"unknown classifier {c!r}; choose from {list(ALL_KINDS)}")
        if self.ranking_classifier not in ("logistic", "linear_svm"):
            raise ConfigError("ranking_classifier", "must be a linear model: 'logistic' or 'linear_svm'")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction", "must lie in (0, 1)")
        if self.threshold < 1:
            raise ConfigError("threshold", "must be >= 1")
        if self.friendship_rule not in ("either", "mutual"):
            raise ConfigError("friendship_rule", "must be 'either' or 'mutual'")
        if self.n_semesters < 2:
            raise ConfigError("n_semesters", "must be >= 2")
        if not 0.0 <= self.missing_value <= 1.0:
            raise ConfigError("missing_value", "must lie in [0, 1]")
        if self.total_mode not in ("soft", "hard"):
            raise ConfigError("total_mode", "must be 'soft' or 'hard'")

    @property
    def agreement(self) -> AgreementConfig:
        return AgreementConfig(self.missing_value, self.total_mode)

    @property
    def calendar(self) -> SemesterCalendar:
        return academic_calendar(self.n_semesters, self.start_year)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["k_values"] = list(self.k_values)
        d["classifiers"] = list(self.classifiers)
        d["train"] = self.train.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in d.items():
            if key not in known:
                raise ConfigError(key, "unknown option")
            kwargs[key] = _coerce(key, value)
        return cls(**kwargs)

    def updated(self, **changes) -> "PipelineConfig":
        changes = {k: _coerce(k, v) for k, v in changes.items() if v is not None}
        return replace(self, **changes)


def _coerce(key: str, value):
    def bad():
        return ConfigError(key, f"invalid value {value!r}")

    if key == "train":
        if isinstance(value, TrainConfig):
            return value
        if not isinstance(value, dict):
            raise bad()
        try:
            return TrainConfig.from_dict(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(key, str(e)) from None
    if key in ("k_values", "classifiers"):
        if isinstance(value, str):
            value = [v for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise bad()
        if key == "k_values":
            try:
                return tuple(_as_int(v) for v in value)
            except ValueError:
                raise bad() from None
        return tuple(str(v).strip() for v in value)
    if key == "max_hops":
        if value is None or value == "all":
            return None
        try:
            return _as_int(value)
        except ValueError:
            raise bad() from None
    if key in ("seed", "threshold", "n_semesters", "start_year"):
        try:
            return _as_int(value)
        except ValueError:
            raise bad() from None
    if key in ("train_fraction", "missing_value"):
        if isinstance(value, bool):
            raise bad()
        try:
            return float(value)
        except (TypeError, ValueError):
            raise bad() from None
    if not isinstance(value, str):
        raise bad()
    return value


def _as_int(v) -> int:
    if isinstance(v, bool):
        raise ValueError(v)
    if isinstance(v, str):
        return int(v.strip())
    if int(v) != v:
        raise ValueError(v)
    return int(v)


# -- inputs -------------------------------------------------------------------

@dataclass
class Inputs:
    schema: AttributeSchema
    contacts: list[ContactRecord]
    profiles: ProfileTable
    nominations: list[Nomination]
    digests: dict[str, str]


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def input_paths(data_dir: str | Path) -> dict[str, Path]:
    d = Path(data_dir)
    paths = {k: d / v for k, v in INPUT_FILES.items()}
    missing = [str(p) for p in paths.values() if not p.is_file()]
    if missing:
        raise InputError(f"missing input file(s): {', '.join(missing)}")
    if (d / SCHEMA_FILE).is_file():
        paths["schema"] = d / SCHEMA_FILE
    return paths


def load_inputs(data_dir: str | Path) -> Inputs:
    """Read contacts, profiles and nominations (plus ``schema.json`` when present)."""
    paths = input_paths(data_dir)
    schema = load_schema(paths["schema"]) if "schema" in paths else default_schema()
    contacts, c_err = parse_contact_log(paths["contacts"])
    noms, n_err = parse_nominations(paths["nominations"])
    for name, errs in (("contacts", c_err), ("nominations", n_err)):
        if errs:
            log.warning("%s: skipped %d malformed row(s); first: %s", name, len(errs), errs[0])
    profiles = read_profiles(schema, paths["profiles"], strict=False)
    digests = {name: file_digest(p) for name, p in sorted(paths.items())}
    return Inputs(schema, contacts, profiles, noms, digests)


def build_networks(inputs: Inputs, cfg: PipelineConfig) -> dict[str, list[Snapshot]]:
    """Activity and friendship snapshots over the surveyed students.

    Friendship edges carry the pair's call/text counts from the contact log.
    """
    cal = cfg.calendar
    participants = participants_from_profiles(inputs.profiles)
    activity = build_activity_network(inputs.contacts, cal, cfg.threshold, participants)
    friends = build_friendship_network(inputs.nominations, participants, cal, cfg.friendship_rule)
    friends = attach_contact_weights(friends, inputs.contacts, cal)
    return {"activity": activity, "friendship": friends}


# -- eigenfeature models ------------------------------------------------------

@dataclass
class FittedPredictor:
    """A classifier plus the feature transform it was trained behind.

    With ``k=None`` the model sees raw features; otherwise rows are
    standardized with the training statistics and projected onto the top-k
    right singular vectors.
    """

    model: Classifier
    k: int | None
    standardization: Standardization | None = None
    factors: SvdFactors | None = None
    feature_names: list[str] = field(default_factory=list)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.k is None:
            return X
        return project(self.standardization.transform(X), self.factors, self.k)

    def predict(self, X: np.ndarray):
        return self.model.predict(self.transform(X))

    def ranking(self) -> FeatureRanking:
        lw = self.model.linear_weights
        if lw is None or self.k is None:
            raise ValueError("a ranking needs a linear model trained on eigenfeatures")
        return rank_features(self.factors, lw[0], self.k, self.feature_names)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"k": self.k, "feature_names": list(self.feature_names),
                             "model": model_to_dict(self.model)}
        if self.k is not None:
            d["standardization"] = {"means": self.standardization.means.tolist(),
                                    "stds": self.standardization.stds.tolist()}
            d["factors"] = {"S": self.factors.S.tolist(), "V": self.factors.V.tolist()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FittedPredictor":
        model = model_from_dict(d["model"])
        k = d.get("k")
        st = fac = None
        if k is not None:
            st = Standardization(np.array(d["standardization"]["means"]), np.array(d["standardization"]["stds"]))
            S = np.array(d["factors"]["S"], dtype=float)
            V = np.array(d["factors"]["V"], dtype=float)
            fac = SvdFactors(np.empty((0, len(S))), S, V)
        return cls(model, k, st, fac, list(d.get("feature_names", [])))


@dataclass
class FeatureSpace:
    k: int | None
    X_train: np.ndarray
    X_test: np.ndarray
    standardization: Standardization | None = None
    factors: SvdFactors | None = None


def feature_spaces(sp: SplitDataset, k_values: Sequence[int | None]) -> list[FeatureSpace]:
    """Raw features for ``None``; train-fitted standardization + SVD projection for each k."""
    out = []
    st = fac = None
    for k in k_values:
        if k is None:
            out.append(FeatureSpace(None, sp.train.X, sp.test.X))
            continue
        if fac is None:
            st = fit_standardization(sp.train.X)
            fac = svd(st.transform(sp.train.X))
        if k > fac.rank_bound:
            raise ConfigError("k_values", f"k={k} exceeds the {fac.rank_bound} available components")
        out.append(FeatureSpace(k, project(st.transform(sp.train.X), fac, k),
                                project(st.transform(sp.test.X), fac, k), st, fac))
    return out


def train_predictor(ds: LabeledDataset, kind: str, k: int | None, cfg: TrainConfig = TrainConfig()) -> FittedPredictor:
    """Fit one classifier on all of ``ds`` behind the chosen feature transform."""
    st = fac = None
    X = ds.X
    if k is not None:
        st = fit_standardization(X)
        fac = svd(st.transform(X))
        if not 1 <= k <= fac.rank_bound:
            raise ConfigError("k", f"must lie in 1..{fac.rank_bound}")
        X = project(st.transform(X), fac, k)
    return FittedPredictor(make(kind, cfg).fit(X, ds.y), k, st, fac, list(ds.feature_names))


# -- full run -----------------------------------------------------------------

@dataclass
class PipelineResult:
    config: PipelineConfig
    dataset: LabeledDataset
    split: SplitDataset
    metric_rows: list[MetricRow]
    rankings: dict[tuple[str, int], FeatureRanking]
    rank_correlations: dict[tuple[int, int], float]
    stats: ReportStats
    labels: dict[str, str]


def _fit_all(kinds: Sequence[str], X, y, cfg: TrainConfig) -> dict[str, Classifier]:
    fitted: dict[str, Classifier] = {}
    for kind in kinds:
        if kind == "ensemble":
            continue
        fitted[kind] = make(kind, cfg).fit(X, y)
    if "ensemble" in kinds:
        members = [fitted.get(b) or make(b, cfg).fit(X, y) for b in BASE_KINDS]
        fitted["ensemble"] = MajorityVoteEnsemble.from_members(members, cfg)
    return fitted


def describe_stats(snapshots: dict[str, list[Snapshot]], inputs: Inputs, cfg: PipelineConfig) -> ReportStats:
    cs: ClassStats = edge_class_stats(snapshots[cfg.network], inputs.profiles, inputs.schema, cfg.agreement)
    cm: CommStats = comm_stats(snapshots["activity"], snapshots["friendship"])
    return ReportStats(cs, cm)


def run(inputs: Inputs, cfg: PipelineConfig, with_stats: bool = True) -> PipelineResult:
    snaps = build_networks(inputs, cfg)
    ds = build_task_dataset(cfg.task, snaps[cfg.network], inputs.profiles, inputs.schema,
                            cfg.max_hops, cfg.agreement)
    sp = split(ds, cfg.train_fraction, cfg.seed)
    rows: list[MetricRow] = []
    rankings: dict[tuple[str, int], FeatureRanking] = {}
    for space in feature_spaces(sp, [None, *cfg.k_values]):
        fitted = _fit_all(cfg.classifiers, space.X_train, sp.train.y, cfg.train)
        for kind in cfg.classifiers:
            acc, rec, counts = metrics(fitted[kind].predict(space.X_test), sp.test.y)
            rows.append(MetricRow(cfg.task, cfg.network, kind, feature_set_label(space.k), acc, rec, counts))
        if space.k is not None:
            ranker = fitted.get(cfg.ranking_classifier) or make(cfg.ranking_classifier, cfg.train).fit(
                space.X_train, sp.train.y)
            w, _ = ranker.linear_weights
            rankings[(cfg.task, space.k)] = rank_features(space.factors, w, space.k, ds.feature_names)
    ks = sorted(cfg.k_values)
    corr = {(a, b): rank_correlation(rankings[(cfg.task, a)], rankings[(cfg.task, b)])
            for i, a in enumerate(ks) for b in ks[i + 1:]}
    stats = describe_stats(snaps, inputs, cfg) if with_stats else ReportStats()
    labels = dict(zip(inputs.schema.feature_names(), inputs.schema.feature_labels()))
    return PipelineResult(cfg, ds, sp, rows, rankings, corr, stats, labels)
