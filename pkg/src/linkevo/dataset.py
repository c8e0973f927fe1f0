"""Labeled pair datasets for the formation and persistence tasks."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .attributes import (AgreementConfig, AttributeSchema, EncodedProfiles, Profile, ProfileTable,
                         encode_profiles)
from .attributes import feature_matrix as _feature_matrix
from .graphcore import Pair, Snapshot, qualifying_edges, shared_nodes

log = logging.getLogger(__name__)

FORMATION = "formation"
PERSISTENCE = "persistence"


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    task: str
    X: np.ndarray
    y: np.ndarray
    pairs: list[Pair]
    semesters: list[int]
    feature_names: list[str]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.y), -1) if len(self.y) else \
            np.empty((0, len(self.feature_names)))
        self.y = np.asarray(self.y, dtype=int)
        if self.X.shape[1] != len(self.feature_names):
            raise DatasetError(f"{self.X.shape[1]} feature columns but {len(self.feature_names)} names")
        if not (len(self.pairs) == len(self.semesters) == len(self.y)):
            raise DatasetError("pairs, semesters and labels must align")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n_positive(self) -> int:
        return int(self.y.sum())

    @property
    def n_negative(self) -> int:
        return len(self.y) - self.n_positive

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        return LabeledDataset(self.task, self.X[idx], self.y[idx], [self.pairs[i] for i in idx],
                              [self.semesters[i] for i in idx], list(self.feature_names), dict(self.meta))


@dataclass
class SplitDataset:
    train: LabeledDataset
    test: LabeledDataset
    seed: int
    train_index: np.ndarray
    test_index: np.ndarray


def encoded_for(schema: AttributeSchema, profiles: ProfileTable, snap: Snapshot) -> EncodedProfiles:
    """Encode the profiles of every node in ``snap``; unsurveyed nodes count as all-missing."""
    sem = snap.semester.index
    plist = []
    missing = 0
    for n in sorted(snap.nodes):
        p = profiles.get((sem, n))
        if p is None:
            missing += 1
            p = Profile(n, sem, (None,) * len(schema))
        plist.append(p)
    if missing:
        log.warning("semester %d: %d nodes have no survey profile; treating answers as missing", sem, missing)
    return encode_profiles(schema, plist)


def pair_features(snap: Snapshot, profiles: ProfileTable, schema: AttributeSchema, pairs: Sequence[Pair],
                  config: AgreementConfig = AgreementConfig()) -> np.ndarray:
    return _feature_matrix(schema, encoded_for(schema, profiles, snap), snap, list(pairs), config)


def hop_restricted_nonedges(snap_t: Snapshot, snap_t1: Snapshot, max_hops: int) -> list[Pair]:
    """Pairs of surviving nodes, non-adjacent in both semesters, within ``max_hops`` in ``snap_t``."""
    keep = shared_nodes(snap_t, snap_t1)
    out = []
    for u in sorted(keep):
        for v, d in snap_t.within_hops(u, max_hops).items():
            if v > u and v in keep and d >= 2 and (u, v) not in snap_t1.edges:
                out.append((u, v))
    out.sort()
    return out


def formation_pairs(snap_t: Snapshot, snap_t1: Snapshot, max_hops: int | None = 2) -> tuple[list[Pair], list[Pair]]:
    """(positives, negatives); ``max_hops=None`` takes every non-forming pair as a negative."""
    keep = shared_nodes(snap_t, snap_t1)
    pos = sorted(p for p in snap_t1.edges if p[0] in keep and p[1] in keep and p not in snap_t.edges)
    if max_hops is None:
        neg = [(u, v) for i, u in enumerate(sorted(keep)) for v in sorted(keep)[i + 1:]
               if (u, v) not in snap_t.edges and (u, v) not in snap_t1.edges]
    else:
        if max_hops < 2:
            raise DatasetError("max_hops must be >= 2; distance 1 is an existing edge")
        neg = hop_restricted_nonedges(snap_t, snap_t1, max_hops)
    return pos, neg


def _assemble(task, snap_t, profiles, schema, pos, neg, config, meta) -> LabeledDataset:
    labeled = sorted([(p, 1) for p in pos] + [(p, 0) for p in neg])
    pairs = [p for p, _ in labeled]
    y = np.array([lab for _, lab in labeled], dtype=int)
    X = pair_features(snap_t, profiles, schema, pairs, config)
    sem = snap_t.semester.index
    return LabeledDataset(task, X, y, pairs, [sem] * len(pairs), schema.feature_names(), meta)


def formation_examples(snap_t: Snapshot, snap_t1: Snapshot, profiles: ProfileTable, schema: AttributeSchema,
                       max_hops: int | None = 2, config: AgreementConfig = AgreementConfig(),
                       require_positive: bool = True) -> LabeledDataset:
    """Pairs that form in the next semester (positive) against nearby pairs that do not."""
    pos, neg = formation_pairs(snap_t, snap_t1, max_hops)
    if require_positive and not pos:
        raise DatasetError(f"no link forms between semesters {snap_t.semester.index} and "
                           f"{snap_t1.semester.index}; pick another semester pair")
    meta = {"task": FORMATION, "semester_pairs": [[snap_t.semester.index, snap_t1.semester.index]],
            "max_hops": max_hops}
    return _assemble(FORMATION, snap_t, profiles, schema, pos, neg, config, meta)


def persistence_examples(snap_t: Snapshot, snap_t1: Snapshot, profiles: ProfileTable, schema: AttributeSchema,
                         config: AgreementConfig = AgreementConfig(), require_edges: bool = True) -> LabeledDataset:
    """Edges of ``snap_t`` whose endpoints survive: persisting (positive) or dissolving (negative)."""
    qual = qualifying_edges(snap_t, snap_t1)
    if require_edges and not qual:
        raise DatasetError(f"semester {snap_t.semester.index} has no edge with both endpoints in "
                           f"semester {snap_t1.semester.index}")
    pos = [p for p in qual if p in snap_t1.edges]
    neg = [p for p in qual if p not in snap_t1.edges]
    meta = {"task": PERSISTENCE, "semester_pairs": [[snap_t.semester.index, snap_t1.semester.index]]}
    return _assemble(PERSISTENCE, snap_t, profiles, schema, pos, neg, config, meta)


def pool(datasets: Sequence[LabeledDataset]) -> LabeledDataset:
    if not datasets:
        raise DatasetError("nothing to pool")
    first = datasets[0]
    for d in datasets[1:]:
        if d.task != first.task or d.feature_names != first.feature_names:
            raise DatasetError("cannot pool datasets of different tasks or feature sets")
    meta = dict(first.meta)
    meta["semester_pairs"] = [sp for d in datasets for sp in d.meta.get("semester_pairs", [])]
    return LabeledDataset(
        first.task,
        np.vstack([d.X for d in datasets]),
        np.concatenate([d.y for d in datasets]),
        [p for d in datasets for p in d.pairs],
        [s for d in datasets for s in d.semesters],
        list(first.feature_names),
        meta,
    )


def build_task_dataset(task: str, snapshots: Sequence[Snapshot], profiles: ProfileTable, schema: AttributeSchema,
                       max_hops: int | None = 2, config: AgreementConfig = AgreementConfig()) -> LabeledDataset:
    """Pool examples from every consecutive semester pair."""
    parts = []
    for s_t, s_t1 in zip(snapshots, snapshots[1:]):
        if task == FORMATION:
            parts.append(formation_examples(s_t, s_t1, profiles, schema, max_hops, config, require_positive=False))
        elif task == PERSISTENCE:
            parts.append(persistence_examples(s_t, s_t1, profiles, schema, config, require_edges=False))
        else:
            raise DatasetError(f"unknown task {task!r}")
    ds = pool(parts)
    if ds.n_positive == 0:
        raise DatasetError(f"{task} dataset has no positive examples")
    if ds.n_negative == 0:
        raise DatasetError(f"{task} dataset has no negative examples")
    return ds


def split(ds: LabeledDataset, train_fraction: float = 0.8, seed: int = 0) -> SplitDataset:
    """Stratified random split; each class contributes ``round_half_up(f * size)`` training rows."""
    if len(ds) == 0:
        raise DatasetError("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for label in (0, 1):
        idx = np.flatnonzero(ds.y == label)
        if 0 < len(idx) < 2:
            raise DatasetError(f"class {label} has only {len(idx)} example(s); need at least 2 to split")
        if len(idx) == 0:
            continue
        n_train = int(np.floor(train_fraction * len(idx) + 0.5))
        perm = rng.permutation(idx)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    tr = np.sort(np.concatenate(train_idx))
    te = np.sort(np.concatenate(test_idx))
    return SplitDataset(ds.subset(tr), ds.subset(te), seed, tr, te)


def write_dataset(ds: LabeledDataset, path: str | Path, extra_meta: dict | None = None) -> None:
    """CSV of features + label, with a ``<path>.meta.json`` sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(ds.feature_names) + ["label"])
        for row, lab in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
    meta = dict(ds.meta)
    meta.update(extra_meta or {})
    meta.update({"task": ds.task, "pairs": [list(p) for p in ds.pairs], "semesters": list(ds.semesters),
                 "n_positive": ds.n_positive, "n_negative": ds.n_negative})
    with open(str(path) + ".meta.json", "w") as f:
        json.dump(meta, f, sort_keys=True)
        f.write("\n")


def read_dataset(path: str | Path) -> LabeledDataset:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[-1] != "label":
            raise DatasetError(f"{path}: last column must be 'label'")
        rows = [r for r in reader]
    X = np.array([[float(v) for v in r[:-1]] for r in rows]).reshape(len(rows), len(header) - 1)
    y = np.array([int(r[-1]) for r in rows], dtype=int)
    meta_path = Path(str(path) + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    pairs = [tuple(p) for p in meta.get("pairs", [(0, 0)] * len(y))]
    sems = meta.get("semesters", [0] * len(y))
    task = meta.get("task", FORMATION)
    return LabeledDataset(task, X, y, pairs, sems, header[:-1], meta)
