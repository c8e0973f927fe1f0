"""Contact-log and nomination ingestion, and per-semester network construction."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .graphcore import NodeId, Semester, Snapshot, SnapshotBuilder, canonical

log = logging.getLogger(__name__)

CONTACT_HEADER = ["timestamp", "sender", "receiver", "kind", "magnitude"]
NOMINATION_HEADER = ["semester", "nominator", "nominee"]

DEFAULT_THRESHOLD = 5


class IngestError(ValueError):
    pass


class ContactKind(enum.Enum):
    CALL = "call"
    TEXT = "text"


@dataclass(frozen=True)
class ContactRecord:
    timestamp: dt.datetime
    sender: NodeId
    receiver: NodeId
    kind: ContactKind
    magnitude: float = 0.0

    def __post_init__(self):
        if self.sender == self.receiver:
            raise IngestError(f"sender and receiver are both {self.sender}")
        if self.magnitude < 0:
            raise IngestError(f"negative magnitude {self.magnitude}")


@dataclass(frozen=True)
class Nomination:
    semester: int
    nominator: NodeId
    nominee: NodeId

    def __post_init__(self):
        if self.nominator == self.nominee:
            raise IngestError(f"student {self.nominator} nominated themselves")


@dataclass(frozen=True)
class RowError:
    line: int
    message: str


@dataclass
class BuildReport:
    """Records that did not contribute to any snapshot."""

    unassigned_records: int = 0
    dropped_records: int = 0
    dropped_nominations: int = 0
    per_semester_records: dict[int, int] = field(default_factory=dict)


class SemesterCalendar(tuple):
    """Ordered, non-overlapping semesters."""

    def __new__(cls, semesters: Iterable[Semester]):
        sems = tuple(semesters)
        for a, b in zip(sems, sems[1:]):
            if not a.index < b.index:
                raise IngestError("semester indices must be strictly increasing")
            if a.end is not None and b.start is not None and not a.end < b.start:
                raise IngestError(f"semesters {a.label!r} and {b.label!r} overlap")
        return super().__new__(cls, sems)

    def locate(self, when: dt.datetime) -> Semester | None:
        for s in self:
            if s.contains(when):
                return s
        return None

    def by_index(self) -> dict[int, Semester]:
        return {s.index: s for s in self}


def academic_calendar(n_semesters: int = 4, start_year: int = 2011) -> SemesterCalendar:
    """Alternating fall (Aug-Dec) and spring (Jan-May) terms; summers are skipped."""
    sems = []
    year = start_year
    fall = True
    for i in range(1, n_semesters + 1):
        if fall:
            sems.append(Semester(i, f"Fall {year}", dt.date(year, 8, 1), dt.date(year, 12, 31)))
            year += 1
        else:
            sems.append(Semester(i, f"Spring {year}", dt.date(year, 1, 1), dt.date(year, 5, 31)))
        fall = not fall
    return SemesterCalendar(sems)


DEFAULT_CALENDAR = academic_calendar(4, 2011)


def _check_header(reader: csv.DictReader, expected: list[str], path, strict: bool) -> None:
    got = reader.fieldnames or []
    if strict and got != expected:
        raise IngestError(f"{path}: expected header {expected}, got {got}")
    missing = [c for c in expected if c not in got]
    if missing:
        raise IngestError(f"{path}: missing columns {missing}")


def parse_contact_log(path: str | Path, strict: bool = False) -> tuple[list[ContactRecord], list[RowError]]:
    """Parse a contact log; malformed rows are skipped and reported (raised when ``strict``)."""
    records: list[ContactRecord] = []
    errors: list[RowError] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        _check_header(reader, CONTACT_HEADER, path, strict)
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = ContactRecord(
                    timestamp=dt.datetime.fromisoformat(row["timestamp"]),
                    sender=int(row["sender"]),
                    receiver=int(row["receiver"]),
                    kind=ContactKind(row["kind"].strip().lower()),
                    magnitude=float(row["magnitude"]),
                )
            except (ValueError, TypeError, AttributeError) as e:
                if strict:
                    raise IngestError(f"{path}:{lineno}: {e}") from None
                errors.append(RowError(lineno, str(e)))
                continue
            records.append(rec)
    if errors:
        log.warning("%s: skipped %d malformed rows", path, len(errors))
    return records, errors


def write_contact_log(records: Iterable[ContactRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CONTACT_HEADER)
        for r in records:
            w.writerow([r.timestamp.isoformat(), r.sender, r.receiver, r.kind.value, repr(float(r.magnitude))])


def parse_nominations(path: str | Path, strict: bool = False) -> tuple[list[Nomination], list[RowError]]:
    noms: list[Nomination] = []
    errors: list[RowError] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        _check_header(reader, NOMINATION_HEADER, path, strict)
        for lineno, row in enumerate(reader, start=2):
            try:
                noms.append(Nomination(int(row["semester"]), int(row["nominator"]), int(row["nominee"])))
            except (ValueError, TypeError) as e:
                if strict:
                    raise IngestError(f"{path}:{lineno}: {e}") from None
                errors.append(RowError(lineno, str(e)))
    return noms, errors


def write_nominations(noms: Iterable[Nomination], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(NOMINATION_HEADER)
        for n in noms:
            w.writerow([n.semester, n.nominator, n.nominee])


def contact_counts(records: Iterable[ContactRecord], cal: SemesterCalendar,
                   report: BuildReport | None = None) -> dict[int, dict[tuple[int, int], list[int]]]:
    """Per semester, per canonical pair: ``[calls, texts]`` in either direction."""
    counts: dict[int, dict[tuple[int, int], list[int]]] = {s.index: defaultdict(lambda: [0, 0]) for s in cal}
    for r in records:
        sem = cal.locate(r.timestamp)
        if sem is None:
            if report is not None:
                report.unassigned_records += 1
            continue
        c = counts[sem.index][canonical(r.sender, r.receiver)]
        c[0 if r.kind is ContactKind.CALL else 1] += 1
        if report is not None:
            report.per_semester_records[sem.index] = report.per_semester_records.get(sem.index, 0) + 1
    return counts


def build_activity_network(records: Sequence[ContactRecord], cal: SemesterCalendar = DEFAULT_CALENDAR,
                           threshold: int = DEFAULT_THRESHOLD,
                           participants: Mapping[int, Iterable[NodeId]] | None = None,
                           report: BuildReport | None = None) -> list[Snapshot]:
    """One snapshot per semester; an edge joins a pair with at least ``threshold`` calls + texts.

    With ``participants`` (semester index -> surveyed students) the node set is
    exactly the surveyed students, isolates included, and records touching
    anyone else are dropped.  Without it, nodes are the students seen in that
    semester's records.
    """
    if threshold < 1:
        raise IngestError("threshold must be >= 1")
    report = report if report is not None else BuildReport()
    counts = contact_counts(records, cal, report)
    if report.unassigned_records:
        log.info("%d records fall outside every semester", report.unassigned_records)
    snaps = []
    for sem in cal:
        b = SnapshotBuilder(sem)
        allowed = None
        if participants is not None:
            allowed = set(participants.get(sem.index, ()))
            b.add_nodes(allowed)
        for (u, v), (calls, texts) in sorted(counts[sem.index].items()):
            if allowed is not None and (u not in allowed or v not in allowed):
                report.dropped_records += calls + texts
                continue
            if allowed is None:
                b.add_nodes((u, v))
            if calls + texts >= threshold:
                b.add_edge(u, v, calls, texts)
        snaps.append(b.build())
    return snaps


def build_friendship_network(noms: Iterable[Nomination], participants: Mapping[int, Iterable[NodeId]],
                             cal: SemesterCalendar = DEFAULT_CALENDAR, rule: str = "either",
                             report: BuildReport | None = None) -> list[Snapshot]:
    """One snapshot per semester from name-generator nominations among participants.

    ``rule="either"`` links a pair when at least one names the other;
    ``rule="mutual"`` requires both directions.  Edge weights start at zero.
    """
    if rule not in ("either", "mutual"):
        raise IngestError(f"unknown friendship rule {rule!r}")
    report = report if report is not None else BuildReport()
    directed: dict[int, Counter] = defaultdict(Counter)
    for n in noms:
        allowed = participants.get(n.semester, ())
        if n.nominator not in allowed or n.nominee not in allowed:
            report.dropped_nominations += 1
            continue
        directed[n.semester][(n.nominator, n.nominee)] += 1
    if report.dropped_nominations:
        log.info("dropped %d nominations involving non-participants", report.dropped_nominations)
    snaps = []
    for sem in cal:
        b = SnapshotBuilder(sem)
        b.add_nodes(participants.get(sem.index, ()))
        arcs = directed.get(sem.index, Counter())
        pairs = set()
        for (a, c) in arcs:
            if rule == "either" or (c, a) in arcs:
                pairs.add(canonical(a, c))
        for u, v in sorted(pairs):
            b.add_edge(u, v)
        snaps.append(b.build())
    return snaps


def attach_contact_weights(snaps: Sequence[Snapshot], records: Iterable[ContactRecord],
                           cal: SemesterCalendar = DEFAULT_CALENDAR) -> list[Snapshot]:
    """Copy per-pair call/text counts from the contact log onto existing edges."""
    counts = contact_counts(records, cal)
    out = []
    for s in snaps:
        per = counts.get(s.semester.index, {})
        b = SnapshotBuilder(s.semester)
        b.add_nodes(s.nodes)
        for pair in s.edges:
            calls, texts = per.get(pair, (0, 0))
            b.add_edge(pair[0], pair[1], calls, texts)
        out.append(b.build())
    return out


def participants_from_profiles(profiles: Mapping[tuple[int, NodeId], object]) -> dict[int, set[NodeId]]:
    out: dict[int, set[NodeId]] = defaultdict(set)
    for sem, node in profiles:
        out[sem].add(node)
    return dict(out)
