"""Semester snapshots of an undirected contact/friendship network.

A :class:`Snapshot` is immutable once built.  Use :class:`SnapshotBuilder`
(or :meth:`Snapshot.from_edges`) to assemble one; edges are stored under the
canonical ``(min, max)`` pair and repeated insertions accumulate weights.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

NodeId = int
Pair = tuple[int, int]


class UnknownNodeError(KeyError):
    """A node id was queried that is not part of the snapshot."""

    def __init__(self, node, where: str = "snapshot"):
        super().__init__(f"node {node!r} is not in {where}")
        self.node = node


@dataclass(frozen=True, order=True)
class Semester:
    index: int
    label: str = ""
    start: dt.date | None = None
    end: dt.date | None = None

    def contains(self, when: dt.date | dt.datetime) -> bool:
        if self.start is None or self.end is None:
            return False
        if isinstance(when, dt.datetime):
            when = when.date()
        return self.start <= when <= self.end


@dataclass(frozen=True)
class EdgeWeight:
    call_count: int = 0
    text_count: int = 0

    def __add__(self, other: "EdgeWeight") -> "EdgeWeight":
        return EdgeWeight(self.call_count + other.call_count, self.text_count + other.text_count)

    @property
    def total(self) -> int:
        return self.call_count + self.text_count


class EdgeClass(enum.Enum):
    EXISTING = "existing"
    TO_BE_FORMED = "to_be_formed"
    NON_EXISTING = "non_existing"


class PersistenceClass(enum.Enum):
    PERSISTING = "persisting"
    DISSOLVING = "dissolving"


UNREACHABLE = None


def canonical(u: NodeId, v: NodeId) -> Pair:
    if u == v:
        raise ValueError(f"self-loop on node {u!r}")
    return (u, v) if u < v else (v, u)


class Snapshot:
    """One semester's simple undirected graph with call/text counts per edge."""

    __slots__ = ("semester", "_nodes", "_edges", "_adj")

    def __init__(self, semester: Semester, nodes: Iterable[NodeId], edges: Mapping[Pair, EdgeWeight]):
        node_set = frozenset(nodes)
        adj: dict[NodeId, set[NodeId]] = {n: set() for n in node_set}
        canon: dict[Pair, EdgeWeight] = {}
        for (u, v), w in edges.items():
            pair = canonical(u, v)
            if pair in canon:
                raise ValueError(f"duplicate edge {pair}")
            for n in pair:
                if n not in node_set:
                    raise UnknownNodeError(n, f"node set of semester {semester.index}")
            canon[pair] = w
            adj[pair[0]].add(pair[1])
            adj[pair[1]].add(pair[0])
        self.semester = semester
        self._nodes = node_set
        self._edges = MappingProxyType(dict(sorted(canon.items())))
        self._adj = MappingProxyType({n: frozenset(s) for n, s in adj.items()})

    @classmethod
    def from_edges(cls, semester: Semester, edges: Iterable, nodes: Iterable[NodeId] = ()) -> "Snapshot":
        """Build from ``(u, v)`` or ``(u, v, calls, texts)`` tuples; repeats are summed."""
        b = SnapshotBuilder(semester)
        b.add_nodes(nodes)
        for e in edges:
            if len(e) == 2:
                b.add_edge(e[0], e[1])
            else:
                b.add_edge(e[0], e[1], e[2], e[3])
        return b.build()

    @property
    def nodes(self) -> frozenset[NodeId]:
        return self._nodes

    @property
    def edges(self) -> Mapping[Pair, EdgeWeight]:
        return self._edges

    def __len__(self) -> int:
        return len(self._nodes)

    def __repr__(self) -> str:
        return f"Snapshot(semester={self.semester.index}, nodes={len(self._nodes)}, edges={len(self._edges)})"

    def _check(self, *nodes: NodeId) -> None:
        for n in nodes:
            if n not in self._nodes:
                raise UnknownNodeError(n, f"snapshot of semester {self.semester.index}")

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        if u == v:
            return False
        return canonical(u, v) in self._edges

    def weight(self, u: NodeId, v: NodeId) -> EdgeWeight:
        return self._edges[canonical(u, v)]

    def neighbors(self, u: NodeId) -> frozenset[NodeId]:
        self._check(u)
        return self._adj[u]

    def degree(self, u: NodeId) -> int:
        return len(self.neighbors(u))

    def pairs(self) -> Iterator[Pair]:
        """All unordered node pairs in canonical order."""
        return combinations(sorted(self._nodes), 2)

    def within_hops(self, source: NodeId, max_hops: int) -> dict[NodeId, int]:
        """BFS distances from ``source`` to every node at most ``max_hops`` away (source excluded)."""
        self._check(source)
        dist = {source: 0}
        queue = deque([source])
        while queue:
            x = queue.popleft()
            d = dist[x]
            if d == max_hops:
                continue
            for y in self._adj[x]:
                if y not in dist:
                    dist[y] = d + 1
                    queue.append(y)
        del dist[source]
        return dist


class SnapshotBuilder:
    """Mutable accumulator; weights of repeated (or reversed) edges are summed."""

    def __init__(self, semester: Semester):
        self.semester = semester
        self._nodes: set[NodeId] = set()
        self._edges: dict[Pair, EdgeWeight] = {}

    def add_node(self, n: NodeId) -> None:
        self._nodes.add(n)

    def add_nodes(self, nodes: Iterable[NodeId]) -> None:
        self._nodes.update(nodes)

    def add_edge(self, u: NodeId, v: NodeId, calls: int = 0, texts: int = 0) -> None:
        if calls < 0 or texts < 0:
            raise ValueError("edge weights must be non-negative")
        pair = canonical(u, v)
        self._nodes.update(pair)
        w = EdgeWeight(calls, texts)
        self._edges[pair] = self._edges[pair] + w if pair in self._edges else w

    def build(self) -> Snapshot:
        return Snapshot(self.semester, self._nodes, self._edges)


def common_neighbors(snap: Snapshot, u: NodeId, v: NodeId) -> int:
    if u == v:
        raise ValueError("common_neighbors needs two distinct nodes")
    return len(snap.neighbors(u) & snap.neighbors(v))


def hop_distance(snap: Snapshot, u: NodeId, v: NodeId) -> int | None:
    """Shortest-path length between ``u`` and ``v``, or ``None`` (``UNREACHABLE``)."""
    if u == v:
        raise ValueError("hop_distance needs two distinct nodes")
    snap._check(u, v)
    dist = {u: 0}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for y in snap._adj[x]:
            if y not in dist:
                if y == v:
                    return dist[x] + 1
                dist[y] = dist[x] + 1
                queue.append(y)
    return UNREACHABLE


def shared_nodes(snap_t: Snapshot, snap_t1: Snapshot) -> frozenset[NodeId]:
    return snap_t.nodes & snap_t1.nodes


def classify_edge(snap_t: Snapshot, snap_t1: Snapshot, u: NodeId, v: NodeId) -> EdgeClass:
    if u == v:
        raise ValueError("classify_edge needs two distinct nodes")
    for n in (u, v):
        if n not in snap_t.nodes:
            raise UnknownNodeError(n, f"semester {snap_t.semester.index}")
        if n not in snap_t1.nodes:
            raise UnknownNodeError(n, f"semester {snap_t1.semester.index}")
    if snap_t.has_edge(u, v):
        return EdgeClass.EXISTING
    if snap_t1.has_edge(u, v):
        return EdgeClass.TO_BE_FORMED
    return EdgeClass.NON_EXISTING


def classify_persistence(snap_t: Snapshot, snap_t1: Snapshot, u: NodeId, v: NodeId) -> PersistenceClass:
    if not snap_t.has_edge(u, v):
        raise ValueError(f"({u}, {v}) is not an edge of semester {snap_t.semester.index}")
    if snap_t1.has_edge(u, v):
        return PersistenceClass.PERSISTING
    return PersistenceClass.DISSOLVING


def partition_pairs(snap_t: Snapshot, snap_t1: Snapshot) -> dict[EdgeClass, list[Pair]]:
    """Split every pair of nodes present in both snapshots into the three edge classes."""
    cells: dict[EdgeClass, list[Pair]] = {c: [] for c in EdgeClass}
    t_edges, t1_edges = snap_t.edges, snap_t1.edges
    for pair in combinations(sorted(shared_nodes(snap_t, snap_t1)), 2):
        if pair in t_edges:
            cells[EdgeClass.EXISTING].append(pair)
        elif pair in t1_edges:
            cells[EdgeClass.TO_BE_FORMED].append(pair)
        else:
            cells[EdgeClass.NON_EXISTING].append(pair)
    return cells


def qualifying_edges(snap_t: Snapshot, snap_t1: Snapshot) -> list[Pair]:
    """Edges of ``snap_t`` whose endpoints both survive into ``snap_t1``."""
    keep = snap_t1.nodes
    return [p for p in snap_t.edges if p[0] in keep and p[1] in keep]


def partition_persistence(snap_t: Snapshot, snap_t1: Snapshot) -> dict[PersistenceClass, list[Pair]]:
    cells: dict[PersistenceClass, list[Pair]] = {c: [] for c in PersistenceClass}
    for pair in qualifying_edges(snap_t, snap_t1):
        cells[classify_persistence(snap_t, snap_t1, *pair)].append(pair)
    return cells


# -- serialization -----------------------------------------------------------

EDGE_HEADER = ["semester", "node_u", "node_v", "call_count", "text_count"]
NODE_HEADER = ["semester", "node"]


def write_snapshots(snapshots: Iterable[Snapshot], edge_path: str | Path, node_path: str | Path) -> None:
    snaps = sorted(snapshots, key=lambda s: s.semester.index)
    with open(edge_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        for s in snaps:
            for (u, v), wt in s.edges.items():
                w.writerow([s.semester.index, u, v, wt.call_count, wt.text_count])
    with open(node_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(NODE_HEADER)
        for s in snaps:
            for n in sorted(s.nodes):
                w.writerow([s.semester.index, n])


def read_snapshots(edge_path: str | Path, node_path: str | Path,
                   semesters: Mapping[int, Semester] | None = None) -> list[Snapshot]:
    builders: dict[int, SnapshotBuilder] = {}

    def builder(idx: int) -> SnapshotBuilder:
        if idx not in builders:
            sem = semesters[idx] if semesters and idx in semesters else Semester(idx)
            builders[idx] = SnapshotBuilder(sem)
        return builders[idx]

    with open(node_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != NODE_HEADER:
            raise ValueError(f"{node_path}: expected header {NODE_HEADER}, got {reader.fieldnames}")
        for row in reader:
            builder(int(row["semester"])).add_node(int(row["node"]))
    with open(edge_path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != EDGE_HEADER:
            raise ValueError(f"{edge_path}: expected header {EDGE_HEADER}, got {reader.fieldnames}")
        for row in reader:
            builder(int(row["semester"])).add_edge(
                int(row["node_u"]), int(row["node_v"]), int(row["call_count"]), int(row["text_count"]))
    return [builders[i].build() for i in sorted(builders)]
