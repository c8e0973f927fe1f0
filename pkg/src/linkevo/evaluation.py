"""Metrics, per-class descriptive statistics and report emission."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .attributes import AgreementConfig, AttributeSchema, ProfileTable, pairwise_agreements
from .dataset import encoded_for
from .graphcore import (EdgeClass, PersistenceClass, Snapshot, common_neighbors, partition_pairs,
                        partition_persistence)
from .models.base import Predictions
from .spectral import FeatureRanking

log = logging.getLogger(__name__)

REPORT_VERSION = 1
EDGE_CLASS_LABELS = {
    EdgeClass.EXISTING: "existing",
    EdgeClass.TO_BE_FORMED: "to_be_formed",
    EdgeClass.NON_EXISTING: "non_existing",
}
PERSISTENCE_LABELS = {PersistenceClass.PERSISTING: "persisting", PersistenceClass.DISSOLVING: "dissolving"}
# per-attribute breakdowns broken out as their own figure tables
APPENDIX_FIGURES = {
    "fig8": "abortion",
    "fig9": "drinking",
    "fig10": "marijuana",
    "fig11": "gay_marriage",
    "fig12": "classes",
    "fig13": "clubs",
}


class EvaluationError(ValueError):
    pass


# -- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def recall_undefined(self) -> bool:
        """True when there were no positives, so recall was reported as 0."""
        return self.tp + self.fn == 0


def _labels(preds) -> np.ndarray:
    if isinstance(preds, Predictions):
        return np.asarray(preds.labels, dtype=int)
    items = list(preds)
    if items and hasattr(items[0], "label"):
        return np.array([p.label for p in items], dtype=int)
    return np.asarray(items, dtype=int)


def confusion(preds, truth) -> ConfusionCounts:
    p = _labels(preds)
    t = np.asarray(truth, dtype=int)
    if len(p) != len(t):
        raise EvaluationError(f"{len(p)} predictions for {len(t)} labels")
    if len(p) == 0:
        raise EvaluationError("cannot score an empty prediction set")
    for name, arr in (("predictions", p), ("labels", t)):
        if not np.isin(arr, (0, 1)).all():
            raise EvaluationError(f"{name} must be 0/1")
    return ConfusionCounts(int(((p == 1) & (t == 1)).sum()), int(((p == 1) & (t == 0)).sum()),
                           int(((p == 0) & (t == 0)).sum()), int(((p == 0) & (t == 1)).sum()))


def metrics(preds, truth) -> tuple[float, float, ConfusionCounts]:
    """(accuracy, recall of the positive class, confusion counts).

    With no positives in ``truth`` recall is 0 and ``counts.recall_undefined`` is set.
    """
    c = confusion(preds, truth)
    acc = (c.tp + c.tn) / c.total
    if c.recall_undefined:
        log.warning("no positive examples among %d; recall reported as 0", c.total)
        rec = 0.0
    else:
        rec = c.tp / (c.tp + c.fn)
    return acc, rec, c


@dataclass(frozen=True)
class MetricRow:
    """One cell of a classifier x feature-set grid."""

    task: str
    network: str
    classifier: str
    features: str          # "no_svd" or "top_<k>"
    accuracy: float
    recall: float
    counts: ConfusionCounts


def feature_set_label(k: int | None) -> str:
    return "no_svd" if k is None else f"top_{k}"


# -- descriptive statistics ---------------------------------------------------

def _mean_se(x: np.ndarray) -> tuple[float | None, float | None]:
    """Mean and standard error (sample std / sqrt n); ``None`` where undefined."""
    n = len(x)
    if n == 0:
        return None, None
    mean = float(x.mean())
    if n == 1:
        return mean, None
    return mean, float(x.std(ddof=1) / np.sqrt(n))


@dataclass(frozen=True)
class ClassCell:
    semester_from: int
    semester_to: int
    edge_class: EdgeClass
    n: int
    total_mean: float | None
    total_se: float | None
    cn_mean: float | None
    cn_se: float | None
    attr_mean: tuple[float | None, ...]
    attr_se: tuple[float | None, ...]


@dataclass
class ClassStats:
    attribute_names: list[str]
    agreement_mode: str
    cells: list[ClassCell] = field(default_factory=list)
    snapshot_sizes: list[tuple[int, str, int, int]] = field(default_factory=list)

    def cell(self, semester_from: int, edge_class: EdgeClass) -> ClassCell:
        for c in self.cells:
            if c.semester_from == semester_from and c.edge_class is edge_class:
                return c
        raise KeyError((semester_from, edge_class))

    @property
    def semester_pairs(self) -> list[tuple[int, int]]:
        return sorted({(c.semester_from, c.semester_to) for c in self.cells})


def snapshot_sizes(snapshots: Sequence[Snapshot]) -> list[tuple[int, str, int, int]]:
    return [(s.semester.index, s.semester.label, len(s.nodes), len(s.edges)) for s in snapshots]


def edge_class_stats(snapshots: Sequence[Snapshot], profiles: ProfileTable, schema: AttributeSchema,
                     config: AgreementConfig = AgreementConfig()) -> ClassStats:
    """Agreement and common-neighbor summaries of every pair, split by edge class, per semester pair.

    Agreements are taken from semester-t profiles and common neighbors from the
    semester-t snapshot.
    """
    if len(snapshots) < 2:
        raise EvaluationError("need at least two consecutive snapshots")
    out = ClassStats(schema.names, config.total_mode, snapshot_sizes=snapshot_sizes(snapshots))
    width = len(schema)
    for s_t, s_t1 in zip(snapshots, snapshots[1:]):
        enc = encoded_for(schema, profiles, s_t)
        for cls, pairs in partition_pairs(s_t, s_t1).items():
            if pairs:
                ru = np.array([enc.row[u] for u, _ in pairs])
                rv = np.array([enc.row[v] for _, v in pairs])
                agr = pairwise_agreements(schema, enc, ru, rv, config)
                cn = np.array([common_neighbors(s_t, u, v) for u, v in pairs], dtype=float)
            else:
                agr, cn = np.empty((0, width)), np.empty(0)
            tm, ts = _mean_se(config.total(agr))
            cm, cs = _mean_se(cn)
            per = [_mean_se(agr[:, j]) for j in range(width)]
            if not pairs:
                log.info("semester %d: %s cell is empty", s_t.semester.index, EDGE_CLASS_LABELS[cls])
            out.cells.append(ClassCell(s_t.semester.index, s_t1.semester.index, cls, len(pairs), tm, ts, cm, cs,
                                       tuple(m for m, _ in per), tuple(s for _, s in per)))
    return out


@dataclass(frozen=True)
class CommCell:
    network: str
    semester: int
    persistence: PersistenceClass
    n: int
    calls_mean: float | None
    calls_se: float | None
    texts_mean: float | None
    texts_se: float | None
    cn_mean: float | None
    cn_se: float | None


@dataclass
class CommStats:
    cells: list[CommCell] = field(default_factory=list)

    def cell(self, network: str, semester: int, persistence: PersistenceClass) -> CommCell:
        for c in self.cells:
            if c.network == network and c.semester == semester and c.persistence is persistence:
                return c
        raise KeyError((network, semester, persistence))


def _comm_cells(network: str, snapshots: Sequence[Snapshot]) -> list[CommCell]:
    cells = []
    for s_t, s_t1 in zip(snapshots, snapshots[1:]):
        for cls, pairs in partition_persistence(s_t, s_t1).items():
            w = [s_t.edges[p] for p in pairs]
            calls = np.array([x.call_count for x in w], dtype=float)
            texts = np.array([x.text_count for x in w], dtype=float)
            cn = np.array([common_neighbors(s_t, u, v) for u, v in pairs], dtype=float)
            cells.append(CommCell(network, s_t.semester.index, cls, len(pairs),
                                  *_mean_se(calls), *_mean_se(texts), *_mean_se(cn)))
    return cells


def comm_stats(activity_snaps: Sequence[Snapshot], friendship_snaps: Sequence[Snapshot] = ()) -> CommStats:
    """Mean calls, texts and common neighbors of persisting vs dissolving edges.

    Only edges whose endpoints both survive to the next semester are counted.
    Friendship edges must already carry the pair's contact-log counts (see
    ``ingest.attach_contact_weights``); a friendship with no contacts counts as 0/0.
    """
    if len(activity_snaps) < 2:
        raise EvaluationError("need at least two consecutive activity snapshots")
    cells = _comm_cells("activity", activity_snaps)
    if friendship_snaps:
        if len(friendship_snaps) < 2:
            raise EvaluationError("need at least two consecutive friendship snapshots")
        cells += _comm_cells("friendship", friendship_snaps)
    return CommStats(cells)


# -- report emission ----------------------------------------------------------

@dataclass
class ReportStats:
    class_stats: ClassStats | None = None
    comm_stats: CommStats | None = None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _table(name: str, columns: list[str], rows: Iterable[Sequence], note: str = "") -> str:
    buf = io.StringIO()
    buf.write(f"# {name} v{REPORT_VERSION}{'; ' + note if note else ''}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _class_rows(cs: ClassStats | None, value):
    if cs is None:
        return []
    return [(c.semester_from, c.semester_to, EDGE_CLASS_LABELS[c.edge_class], c.n, *value(c)) for c in cs.cells]


def _comm_rows(cm: CommStats | None, network: str, value):
    if cm is None:
        return []
    return [(c.semester, PERSISTENCE_LABELS[c.persistence], c.n, *value(c)) for c in cm.cells
            if c.network == network]


CLASS_COLUMNS = ["semester_from", "semester_to", "edge_class", "n", "mean", "std_error"]
COMM_COLUMNS = ["semester", "persistence", "n", "mean", "std_error"]
METRIC_COLUMNS = ["network", "classifier", "features", "accuracy", "recall", "recall_undefined",
                  "tp", "fp", "tn", "fn"]
RANK_COLUMNS = ["features", "rank", "feature", "label", "score", "abs_score"]


def _attr_index(cs: ClassStats | None, name: str) -> int | None:
    if cs is None or name not in cs.attribute_names:
        return None
    return cs.attribute_names.index(name)


def render_report(stats: ReportStats, metrics_rows: Sequence[MetricRow] = (),
                  rankings: Mapping[tuple[str, int], FeatureRanking] | None = None,
                  labels: Mapping[str, str] | None = None) -> dict[str, str]:
    """File name -> content for every report table plus ``summary.txt``."""
    cs, cm = stats.class_stats, stats.comm_stats
    rankings = rankings or {}
    labels = labels or {}
    mode = f"agreement={cs.agreement_mode}" if cs is not None else ""
    files: dict[str, str] = {}

    files["tableI.csv"] = _table("tableI", ["semester", "label", "nodes", "edges"],
                                 cs.snapshot_sizes if cs is not None else [])
    files["fig1.csv"] = _table("fig1", CLASS_COLUMNS, _class_rows(cs, lambda c: (c.total_mean, c.total_se)), mode)
    files["fig2.csv"] = _table("fig2", CLASS_COLUMNS, _class_rows(cs, lambda c: (c.cn_mean, c.cn_se)))
    files["fig3.csv"] = _table("fig3", COMM_COLUMNS, _comm_rows(cm, "activity", lambda c: (c.cn_mean, c.cn_se)))
    for name, net, attr in (("fig4", "activity", "calls"), ("fig5", "activity", "texts"),
                            ("fig6", "friendship", "calls"), ("fig7", "friendship", "texts")):
        files[f"{name}.csv"] = _table(name, COMM_COLUMNS, _comm_rows(
            cm, net, lambda c, a=attr: (getattr(c, f"{a}_mean"), getattr(c, f"{a}_se"))))
    for name, attr in APPENDIX_FIGURES.items():
        j = _attr_index(cs, attr)
        rows = [] if j is None else _class_rows(cs, lambda c, j=j: (c.attr_mean[j], c.attr_se[j]))
        files[f"{name}.csv"] = _table(name, CLASS_COLUMNS, rows, f"attribute={attr}")
    appendix = []
    if cs is not None:
        for c in cs.cells:
            for j, a in enumerate(cs.attribute_names):
                appendix.append((c.semester_from, c.semester_to, EDGE_CLASS_LABELS[c.edge_class], a, c.n,
                                 c.attr_mean[j], c.attr_se[j]))
    files["appendix.csv"] = _table("appendix", ["semester_from", "semester_to", "edge_class", "attribute",
                                                "n", "mean", "std_error"], appendix, mode)

    for table, task in (("tableII", "formation"), ("tableIV", "persistence")):
        rows = [(r.network, r.classifier, r.features, r.accuracy, r.recall, int(r.counts.recall_undefined),
                 r.counts.tp, r.counts.fp, r.counts.tn, r.counts.fn) for r in metrics_rows if r.task == task]
        files[f"{table}.csv"] = _table(table, METRIC_COLUMNS, rows)
    for table, task in (("tableIII", "formation"), ("tableV", "persistence")):
        rows = []
        for (t, k) in sorted(key for key in rankings if key[0] == task):
            rk = rankings[(t, k)]
            for pos, idx in enumerate(rk.order, start=1):
                name = rk.names[idx] if rk.names else str(idx)
                rows.append((feature_set_label(k), pos, name, labels.get(name, name), float(rk.scores[idx]),
                             float(abs(rk.scores[idx]))))
        files[f"{table}.csv"] = _table(table, RANK_COLUMNS, rows)
    files["summary.txt"] = summarize(stats, metrics_rows, rankings)
    return files


# Modeling choices every summary states, so readers know which reading produced the numbers.
CONVENTIONS = (
    "non_existing statistics cover every pair of students surveyed in both semesters, not a sample",
    "agreements use the semester-t survey answers of both students",
    "common neighbors enter the feature vector as a raw count",
    "no_svd means the raw 29-feature input; top_k means standardized features projected on k singular vectors",
    "datasets pool every consecutive semester pair; splits are stratified by label",
    "the ensemble is a majority vote over all six base classifiers, ties predicting negative",
    "feature rankings use the signed weights of a linear classifier (logistic regression by default) on the "
    "top-k projection",
)


def summarize(stats: ReportStats, metrics_rows: Sequence[MetricRow] = (),
              rankings: Mapping[tuple[str, int], FeatureRanking] | None = None) -> str:
    lines = [f"report version {REPORT_VERSION}"]
    lines += [f"convention: {c}" for c in CONVENTIONS]
    cs, cm = stats.class_stats, stats.comm_stats
    if cs is not None:
        lines.append(f"total agreement definition: {cs.agreement_mode}")
        for s_from, s_to in cs.semester_pairs:
            parts = []
            for cls in EdgeClass:
                c = cs.cell(s_from, cls)
                tm = "absent" if c.total_mean is None else f"{c.total_mean:.3f}"
                cn = "absent" if c.cn_mean is None else f"{c.cn_mean:.3f}"
                parts.append(f"{EDGE_CLASS_LABELS[cls]} n={c.n} agreement={tm} common_neighbors={cn}")
            lines.append(f"semesters {s_from}->{s_to}: " + "; ".join(parts))
    if cm is not None:
        for c in cm.cells:
            calls = "absent" if c.calls_mean is None else f"{c.calls_mean:.3f}"
            texts = "absent" if c.texts_mean is None else f"{c.texts_mean:.3f}"
            lines.append(f"{c.network} semester {c.semester} {PERSISTENCE_LABELS[c.persistence]}: n={c.n} "
                         f"calls={calls} texts={texts}")
    for r in metrics_rows:
        lines.append(f"{r.task} {r.network} {r.classifier} {r.features}: accuracy={r.accuracy:.4f} "
                     f"recall={r.recall:.4f}")
    for (task, k), rk in sorted((rankings or {}).items()):
        lines.append(f"{task} ranking {feature_set_label(k)}: top 5 = {', '.join(rk.top(5))}")
    return "\n".join(lines) + "\n"


def emit_report(stats: ReportStats, metrics_rows: Sequence[MetricRow], rankings, path: str | Path,
                labels: Mapping[str, str] | None = None, plots: bool = False) -> list[Path]:
    """Write every report table under ``path``; identical inputs give identical bytes."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise EvaluationError(f"cannot create report directory {out}: {e}") from e
    files = render_report(stats, metrics_rows, rankings, labels)
    if plots:
        from .plots import render_plots
        files.update(render_plots(stats))
    written = []
    for name in sorted(files):
        p = out / name
        try:
            with open(p, "w", newline="") as f:
                f.write(files[name])
        except OSError as e:
            raise EvaluationError(f"cannot write {p}: {e}") from e
        written.append(p)
    return written
