import datetime as dt
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkevo.graphcore import Semester
from linkevo.ingest import (CONTACT_HEADER, DEFAULT_CALENDAR, BuildReport, ContactKind, ContactRecord, IngestError,
                            Nomination, SemesterCalendar, academic_calendar, attach_contact_weights,
                            build_activity_network, build_friendship_network, contact_counts, parse_contact_log,
                            parse_nominations, write_contact_log, write_nominations)
from oracles import contact_edges

CALL, TEXT = ContactKind.CALL, ContactKind.TEXT
FALL = DEFAULT_CALENDAR[0]


def at(day: dt.date, hour=12) -> dt.datetime:
    return dt.datetime(day.year, day.month, day.day, hour)


def random_log(rng, n_nodes=15, n_records=800):
    start, end = dt.datetime(2011, 7, 1), dt.datetime(2013, 6, 30)
    span = int((end - start).total_seconds())
    recs = []
    for _ in range(n_records):
        u, v = rng.choice(n_nodes, 2, replace=False)
        when = start + dt.timedelta(seconds=int(rng.integers(span)))
        recs.append(ContactRecord(when, int(u), int(v), CALL if rng.random() < 0.4 else TEXT, float(rng.integers(100))))
    return recs


class TestParse:
    def test_header_only(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text(",".join(CONTACT_HEADER) + "\n")
        assert parse_contact_log(p) == ([], [])

    def test_one_call_row(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text(",".join(CONTACT_HEADER) + "\n2011-09-01T10:30:00,4,7,call,65\n")
        recs, errs = parse_contact_log(p)
        assert errs == []
        assert recs == [ContactRecord(dt.datetime(2011, 9, 1, 10, 30), 4, 7, CALL, 65.0)]

    def test_planted_malformed_rows(self, tmp_path, rng):
        recs = random_log(rng, n_records=1000)
        path = tmp_path / "c.csv"
        write_contact_log(recs, path)
        lines = path.read_text().splitlines()
        planted = {10: "not-a-date,1,2,call,3", 500: "2011-09-01T00:00:00,3,3,text,1",
                   900: "2011-09-01T00:00:00,1,2,fax,1"}
        for i, bad in planted.items():
            lines[i] = bad
        path.write_text("\n".join(lines) + "\n")
        got, errs = parse_contact_log(path)
        assert len(got) == 997
        assert [e.line for e in errs] == [i + 1 for i in sorted(planted)]
        with pytest.raises(IngestError, match=":11"):
            parse_contact_log(path, strict=True)

    def test_missing_column_is_fatal(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("timestamp,sender,receiver\n")
        with pytest.raises(IngestError, match="kind"):
            parse_contact_log(p)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_contact_log(tmp_path / "nope.csv")

    def test_round_trips(self, tmp_path, rng):
        recs = random_log(rng, n_records=50)
        write_contact_log(recs, tmp_path / "c.csv")
        assert parse_contact_log(tmp_path / "c.csv", strict=True)[0] == recs
        noms = [Nomination(1, 1, 2), Nomination(2, 5, 3)]
        write_nominations(noms, tmp_path / "n.csv")
        assert parse_nominations(tmp_path / "n.csv", strict=True) == (noms, [])

    def test_record_invariants(self):
        with pytest.raises(IngestError):
            ContactRecord(at(FALL.start), 3, 3, CALL)
        with pytest.raises(IngestError):
            Nomination(1, 2, 2)


class TestCalendar:
    def test_default_has_four_terms_without_summer(self):
        labels = [s.label for s in DEFAULT_CALENDAR]
        assert labels == ["Fall 2011", "Spring 2012", "Fall 2012", "Spring 2013"]
        assert DEFAULT_CALENDAR.locate(dt.datetime(2012, 7, 4)) is None

    def test_overlap_rejected(self):
        with pytest.raises(IngestError):
            SemesterCalendar([Semester(1, "a", dt.date(2011, 1, 1), dt.date(2011, 6, 1)),
                              Semester(2, "b", dt.date(2011, 5, 1), dt.date(2011, 9, 1))])

    def test_six_semesters(self):
        cal = academic_calendar(6, 2020)
        assert [s.index for s in cal] == [1, 2, 3, 4, 5, 6]


class TestActivityNetwork:
    def test_no_contacts_no_edge(self):
        snaps = build_activity_network([ContactRecord(at(FALL.start), 1, 2, CALL)], threshold=5)
        assert not snaps[0].edges

    def test_threshold_boundary(self):
        recs = [ContactRecord(at(FALL.start, h), 1, 2, CALL) for h in range(3)]
        recs += [ContactRecord(at(FALL.start, 5 + h), 2, 1, TEXT) for h in range(2)]
        snaps = build_activity_network(recs, threshold=5)
        w = snaps[0].weight(1, 2)
        assert (w.call_count, w.text_count) == (3, 2)
        assert all(not s.edges for s in snaps[1:])

    def test_matches_counting_oracle(self, rng):
        recs = random_log(rng)
        report = BuildReport()
        snaps = build_activity_network(recs, threshold=4, report=report)
        for sem, snap in zip(DEFAULT_CALENDAR, snaps):
            want = contact_edges(recs, sem, 4)
            assert {p: (w.call_count, w.text_count) for p, w in snap.edges.items()} == want
        assert sum(report.per_semester_records.values()) + report.unassigned_records == len(recs)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 8), st.integers(0, 5))
    def test_monotone_in_threshold(self, seed, t, bump):
        recs = random_log(np.random.default_rng(seed), n_nodes=8, n_records=300)
        lo = build_activity_network(recs, threshold=t)
        hi = build_activity_network(recs, threshold=t + bump)
        for a, b in zip(lo, hi):
            assert set(b.edges) <= set(a.edges)

    def test_each_record_counts_once(self, rng):
        recs = random_log(rng, n_records=400)
        counts = contact_counts(recs, DEFAULT_CALENDAR)
        total = sum(c + x for sem in counts.values() for c, x in sem.values())
        assert total == sum(1 for r in recs if DEFAULT_CALENDAR.locate(r.timestamp) is not None)

    def test_participants_define_nodes(self):
        recs = [ContactRecord(at(FALL.start, h), 1, 9, TEXT) for h in range(6)]
        report = BuildReport()
        snaps = build_activity_network(recs, threshold=5, participants={1: {1, 2, 3}}, report=report)
        assert snaps[0].nodes == frozenset({1, 2, 3}) and not snaps[0].edges
        assert report.dropped_records == 6

    def test_invalid_threshold(self):
        with pytest.raises(IngestError):
            build_activity_network([], threshold=0)


class TestFriendshipNetwork:
    PARTS = {1: {1, 2, 3, 4}}

    def test_single_nomination(self):
        snaps = build_friendship_network([Nomination(1, 1, 2)], self.PARTS)
        assert set(snaps[0].edges) == {(1, 2)}

    def test_non_participant_dropped(self):
        report = BuildReport()
        snaps = build_friendship_network([Nomination(1, 1, 99)], self.PARTS, report=report)
        assert not snaps[0].edges and report.dropped_nominations == 1

    def test_mutual_rule(self):
        noms = [Nomination(1, 1, 2), Nomination(1, 2, 1), Nomination(1, 3, 4)]
        snaps = build_friendship_network(noms, self.PARTS, rule="mutual")
        assert set(snaps[0].edges) == {(1, 2)}

    def test_random_nominations_match_either_direction_oracle(self, rng):
        parts = {s: set(range(20)) for s in (1, 2, 3, 4)}
        noms = [Nomination(int(s), int(a), int(b)) for s, a, b in
                ((rng.integers(1, 5), *rng.choice(25, 2, replace=False)) for _ in range(300))]
        snaps = build_friendship_network(noms, parts)
        for snap in snaps:
            sem = snap.semester.index
            arcs = {(n.nominator, n.nominee) for n in noms if n.semester == sem}
            want = {(u, v) for u, v in itertools.combinations(range(20), 2) if (u, v) in arcs or (v, u) in arcs}
            assert set(snap.edges) == want

    def test_contact_weights_attached(self):
        snaps = build_friendship_network([Nomination(1, 1, 2)], self.PARTS)
        recs = [ContactRecord(at(FALL.start), 2, 1, CALL), ContactRecord(at(FALL.start, 13), 1, 2, TEXT),
                ContactRecord(at(FALL.start, 14), 1, 3, TEXT)]
        w = attach_contact_weights(snaps, recs)[0]
        assert set(w.edges) == {(1, 2)}
        assert (w.weight(1, 2).call_count, w.weight(1, 2).text_count) == (1, 1)
