"""Synthetic co-evolving networks with planted homophily, pruning and triadic closure.

Profiles are drawn around a few latent archetypes and stay fixed.  Semester
1 is a sparse random graph drawn from the formation rule with no common
neighbours.  Each later transition then

* removes students who drop out,
* dissolves each edge with probability
  ``clip(base_dissolution - pruning * (a - mean edge agreement))``,
* forms each non-edge with probability
  ``clip(base_formation + homophily * (a - a_ref) + triadic * min(cn, cap) / cap)``,

where ``a`` is the pair's total agreement divided by the attribute count and
``a_ref`` is a fixed quantile of ``a`` over all pairs.  Contact logs are then
written so every edge clears the activity threshold; persisting edges get a
larger expected volume than dissolving ones.

Three independent random streams drive attributes, structure and contact
volumes, so worlds that differ only in mechanism strengths share their
structural draws.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .attributes import (AttributeSchema, Binary, Categorical, Ordinal, Profile, SetValued, default_schema,
                         encode_profiles, pairwise_agreements, save_schema, write_profiles)
from .graphcore import Semester, Snapshot, SnapshotBuilder
from .ingest import (ContactKind, ContactRecord, Nomination, SemesterCalendar, academic_calendar,
                     write_contact_log, write_nominations)


class SynthConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SynthConfig:
    n_nodes: int = 200
    n_semesters: int = 4
    homophily_strength: float = 0.0
    pruning_strength: float = 0.0
    triadic_strength: float = 0.0
    base_formation_rate: float = 0.002
    base_dissolution_rate: float = 0.3
    reference_quantile: float = 0.9
    burn_in: int = 0
    common_neighbor_cap: int = 5
    n_archetypes: int = 8
    archetype_fidelity: float = 0.7
    missing_rate: float = 0.0
    dropout_rate: float = 0.03
    threshold: int = 5
    persist_extra_contacts: float = 30.0
    dissolve_extra_contacts: float = 6.0
    call_fraction: float = 0.3
    noise_pairs_per_node: float = 1.0
    friend_fraction: float = 0.8
    start_year: int = 2011
    seed: int = 0
    schema: AttributeSchema = field(default_factory=default_schema, compare=False)

    def __post_init__(self):
        if self.n_nodes < 2:
            raise SynthConfigError("n_nodes", "need at least 2 nodes")
        if self.n_semesters < 2:
            raise SynthConfigError("n_semesters", "need at least 2 semesters")
        for name in ("homophily_strength", "pruning_strength", "triadic_strength",
                     "persist_extra_contacts", "dissolve_extra_contacts", "noise_pairs_per_node"):
            if getattr(self, name) < 0:
                raise SynthConfigError(name, "must be non-negative")
        for name in ("base_formation_rate", "base_dissolution_rate", "reference_quantile", "archetype_fidelity",
                     "missing_rate", "dropout_rate", "call_fraction", "friend_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SynthConfigError(name, f"must lie in [0, 1], got {v!r}")
        if self.threshold < 1:
            raise SynthConfigError("threshold", "must be >= 1")
        if self.burn_in < 0:
            raise SynthConfigError("burn_in", "must be non-negative")
        if self.common_neighbor_cap < 1:
            raise SynthConfigError("common_neighbor_cap", "must be >= 1")
        if self.n_archetypes < 1:
            raise SynthConfigError("n_archetypes", "must be >= 1")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "schema"}
        d["schema"] = self.schema.to_config()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in d.items():
            if key not in known:
                raise SynthConfigError(key, "unknown option")
            if key == "schema":
                kwargs[key] = AttributeSchema.from_config(value)
                continue
            default = getattr(cls, key, None)
            try:
                if isinstance(default, bool) or isinstance(default, str):
                    kwargs[key] = value
                elif isinstance(default, int):
                    if isinstance(value, bool) or int(value) != value:
                        raise ValueError
                    kwargs[key] = int(value)
                elif isinstance(default, float):
                    if isinstance(value, bool):
                        raise ValueError
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = value
            except (TypeError, ValueError):
                raise SynthConfigError(key, f"invalid value {value!r}") from None
        return cls(**kwargs)


# Parameter bundles for the regimes the acceptance checks exercise. "homophily"
# plants formation on agreement and shared neighbors with almost no churn;
# "churn" keeps that formation but dissolves edges at random; "pruning" adds
# agreement-driven dissolution on top of the churn.
PRESETS: dict[str, dict[str, Any]] = {
    "null": {},
    "homophily": dict(homophily_strength=12.0, triadic_strength=0.5, base_formation_rate=0.0,
                      base_dissolution_rate=0.02, reference_quantile=0.92, n_archetypes=12,
                      archetype_fidelity=0.75),
}
PRESETS["churn"] = PRESETS["homophily"] | dict(base_dissolution_rate=0.4)
PRESETS["pruning"] = PRESETS["churn"] | dict(pruning_strength=8.0)


def preset(name: str, **overrides) -> SynthConfig:
    """A config from a named parameter bundle, with keyword overrides applied on top."""
    if name not in PRESETS:
        raise SynthConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return SynthConfig.from_dict(PRESETS[name] | overrides)


@dataclass
class TransitionLog:
    """Every stochastic decision of one transition, for ground-truth checks."""

    semester: int
    formation_pairs: np.ndarray       # (k, 2) candidate non-edges
    formation_agreement: np.ndarray
    formation_cn: np.ndarray
    formation_prob: np.ndarray
    formed: np.ndarray
    dissolution_pairs: np.ndarray
    dissolution_agreement: np.ndarray
    dissolution_prob: np.ndarray
    dissolved: np.ndarray
    departed: list[int]


@dataclass
class SynthWorld:
    config: SynthConfig
    schema: AttributeSchema
    calendar: SemesterCalendar
    profiles: dict[tuple[int, int], Profile]
    snapshots: list[Snapshot]
    friendship: list[Snapshot]
    contacts: list[ContactRecord]
    nominations: list[Nomination]
    participants: dict[int, set[int]]
    logs: list[TransitionLog]
    reference_agreement: float
    expected_seed_density: float
    archetype: np.ndarray


def _draw_value(kind, rng: np.random.Generator):
    if isinstance(kind, Binary):
        return bool(rng.integers(0, 2))
    if isinstance(kind, Categorical):
        return int(rng.integers(0, kind.count))
    if isinstance(kind, Ordinal):
        return int(rng.integers(kind.lo, kind.hi + 1))
    size = max(1, len(kind.universe) // 8)
    return frozenset(kind.universe[i] for i in rng.choice(len(kind.universe), size, replace=False))


def _perturb(kind, proto, rng: np.random.Generator, fidelity: float):
    if isinstance(kind, SetValued):
        keep = {x for x in sorted(proto) if rng.random() < fidelity}
        n_extra = rng.binomial(max(1, len(proto)), 1.0 - fidelity)
        extra = {kind.universe[i] for i in rng.choice(len(kind.universe), n_extra, replace=False)}
        return frozenset(keep | extra)
    if rng.random() < fidelity:
        if isinstance(kind, Ordinal) and rng.random() < 0.5:
            return int(np.clip(proto + rng.choice((-1, 1)), kind.lo, kind.hi))
        return proto
    return _draw_value(kind, rng)


def generate_profiles(cfg: SynthConfig, rng: np.random.Generator) -> tuple[list[tuple], np.ndarray]:
    schema = cfg.schema
    protos = [[_draw_value(a.kind, rng) for a in schema] for _ in range(cfg.n_archetypes)]
    group = rng.integers(0, cfg.n_archetypes, cfg.n_nodes)
    values = []
    for i in range(cfg.n_nodes):
        row = []
        for j, a in enumerate(schema):
            v = _perturb(a.kind, protos[group[i]][j], rng, cfg.archetype_fidelity)
            if cfg.missing_rate and rng.random() < cfg.missing_rate:
                v = None
            row.append(v)
        values.append(tuple(row))
    return values, group


def _clip01(x):
    return np.clip(x, 0.0, 1.0)


def formation_probability(cfg: SynthConfig, agreement, cn, reference: float) -> np.ndarray:
    """Chance that a candidate pair links, given normalized agreement and common-neighbor count."""
    cap = cfg.common_neighbor_cap
    return _clip01(cfg.base_formation_rate + cfg.homophily_strength * (np.asarray(agreement) - reference)
                   + cfg.triadic_strength * np.minimum(cn, cap) / cap)


def dissolution_probability(cfg: SynthConfig, agreement, mean_edge_agreement: float) -> np.ndarray:
    """Chance that an existing edge dissolves; below-average agreement raises it when pruning is on."""
    return _clip01(cfg.base_dissolution_rate - cfg.pruning_strength * (np.asarray(agreement) - mean_edge_agreement))


def generate(cfg: SynthConfig) -> SynthWorld:
    attr_ss, struct_ss, contact_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    attr_rng = np.random.default_rng(attr_ss)
    struct_rng = np.random.default_rng(struct_ss)
    contact_rng = np.random.default_rng(contact_ss)
    n, T, schema = cfg.n_nodes, cfg.n_semesters, cfg.schema
    cal = academic_calendar(T, cfg.start_year)

    values, group = generate_profiles(cfg, attr_rng)
    base_profiles = [Profile(i, 0, values[i]) for i in range(n)]
    enc = encode_profiles(schema, base_profiles)
    iu, ju = np.triu_indices(n, k=1)
    agr = pairwise_agreements(schema, enc, iu, ju).sum(axis=1) / len(schema)
    a_ref = float(np.quantile(agr, cfg.reference_quantile))

    def formation_prob(cn):
        return formation_probability(cfg, agr, cn, a_ref)

    p_seed = formation_prob(np.zeros_like(agr))
    density = float(p_seed.mean())
    if density > 0.5:
        raise SynthConfigError("homophily_strength", f"expected seed density {density:.3f} exceeds 0.5")

    active = np.ones(n, dtype=bool)
    edge = struct_rng.random(len(agr)) < p_seed
    for _ in range(cfg.burn_in):
        edge = _step(cfg, agr, edge, iu, ju, n, a_ref, struct_rng)
    states = [(active.copy(), edge.copy())]
    logs: list[TransitionLog] = []
    for t in range(1, T):
        u_drop = struct_rng.random(n)
        u_diss = struct_rng.random(len(agr))
        u_form = struct_rng.random(len(agr))
        departed = np.flatnonzero(active & (u_drop < cfg.dropout_rate))
        stay = active.copy()
        stay[departed] = False
        both = stay[iu] & stay[ju]

        adj = np.zeros((n, n))
        adj[iu[edge], ju[edge]] = 1.0
        adj += adj.T
        cn = (adj @ adj)[iu, ju]

        cur = edge & both
        mean_edge_agr = float(agr[cur].mean()) if cur.any() else a_ref
        p_diss = dissolution_probability(cfg, agr, mean_edge_agr)
        dissolved = cur & (u_diss < p_diss)
        cand = both & ~edge
        p_form = formation_prob(cn)
        formed = cand & (u_form < p_form)

        logs.append(TransitionLog(
            semester=t,
            formation_pairs=np.column_stack([iu[cand], ju[cand]]),
            formation_agreement=agr[cand], formation_cn=cn[cand], formation_prob=p_form[cand],
            formed=formed[cand],
            dissolution_pairs=np.column_stack([iu[cur], ju[cur]]),
            dissolution_agreement=agr[cur], dissolution_prob=p_diss[cur], dissolved=dissolved[cur],
            departed=[int(x) for x in departed],
        ))
        edge = (cur & ~dissolved) | formed
        active = stay
        states.append((active.copy(), edge.copy()))

    participants = {cal[t].index: {int(x) for x in np.flatnonzero(states[t][0])} for t in range(T)}
    profiles = {(cal[t].index, i): Profile(i, cal[t].index, values[i])
                for t in range(T) for i in sorted(participants[cal[t].index])}

    friend_flag = contact_rng.random(len(agr)) < cfg.friend_fraction
    snapshots, friendship, contacts, nominations = [], [], [], []
    for t in range(T):
        sem = cal[t]
        act, e = states[t]
        nxt = states[t + 1][1] if t + 1 < T else e
        idx = np.flatnonzero(e)
        persist = nxt[idx]
        extra = np.where(persist, cfg.persist_extra_contacts, cfg.dissolve_extra_contacts)
        totals = cfg.threshold + contact_rng.poisson(extra)
        calls = contact_rng.binomial(totals, cfg.call_fraction)
        texts = totals - calls
        b = SnapshotBuilder(sem)
        b.add_nodes(int(x) for x in np.flatnonzero(act))
        fb = SnapshotBuilder(sem)
        fb.add_nodes(int(x) for x in np.flatnonzero(act))
        per_pair = []
        for k, p in enumerate(idx):
            u, v = int(iu[p]), int(ju[p])
            b.add_edge(u, v, int(calls[k]), int(texts[k]))
            per_pair.append((u, v, int(calls[k]), int(texts[k])))
            if friend_flag[p]:
                fb.add_edge(u, v)
                mode = contact_rng.integers(0, 3)
                if mode in (0, 2):
                    nominations.append(Nomination(sem.index, u, v))
                if mode in (1, 2):
                    nominations.append(Nomination(sem.index, v, u))
        # sub-threshold chatter between non-adjacent active students
        act_nodes = np.flatnonzero(act)
        n_noise = contact_rng.poisson(cfg.noise_pairs_per_node * len(act_nodes) / 2) if len(act_nodes) > 1 else 0
        seen = set()
        for _ in range(n_noise):
            u, v = contact_rng.choice(act_nodes, 2, replace=False)
            u, v = int(min(u, v)), int(max(u, v))
            if _has_edge(e, n, u, v) or (u, v) in seen:
                continue
            seen.add((u, v))
            tot = int(contact_rng.integers(1, cfg.threshold)) if cfg.threshold > 1 else 0
            c = int(contact_rng.binomial(tot, cfg.call_fraction))
            per_pair.append((u, v, c, tot - c))
        snapshots.append(b.build())
        friendship.append(fb.build())
        contacts.extend(_emit_contacts(sem, per_pair, contact_rng))

    return SynthWorld(cfg, schema, cal, profiles, snapshots, friendship, contacts, nominations, participants,
                      logs, a_ref, density, group)


def _step(cfg: SynthConfig, agr, edge, iu, ju, n, a_ref, rng) -> np.ndarray:
    """One unlogged transition without dropout (burn-in before the first semester)."""
    adj = np.zeros((n, n))
    adj[iu[edge], ju[edge]] = 1.0
    adj += adj.T
    cn = (adj @ adj)[iu, ju]
    u_diss = rng.random(len(agr))
    u_form = rng.random(len(agr))
    mean_edge_agr = float(agr[edge].mean()) if edge.any() else a_ref
    p_diss = dissolution_probability(cfg, agr, mean_edge_agr)
    p_form = formation_probability(cfg, agr, cn, a_ref)
    return (edge & ~(u_diss < p_diss)) | (~edge & (u_form < p_form))


def _has_edge(edge: np.ndarray, n: int, u: int, v: int) -> bool:
    """Whether canonical pair (u < v) is set in a triu-ordered edge vector."""
    pos = u * n - u * (u + 1) // 2 + (v - u - 1)
    return bool(edge[pos])


def _emit_contacts(sem: Semester, per_pair, rng: np.random.Generator) -> list[ContactRecord]:
    if not per_pair:
        return []
    start = np.datetime64(dt.datetime.combine(sem.start, dt.time()), "s")
    span = int((dt.datetime.combine(sem.end, dt.time()) - dt.datetime.combine(sem.start, dt.time())).total_seconds())
    span += 86399
    arr = np.array(per_pair, dtype=np.int64).reshape(-1, 4)
    # one row per event: calls of a pair first, then its texts
    counts = arr[:, 2:4].ravel()
    pair_of = np.repeat(np.repeat(np.arange(len(arr)), 2), counts)
    is_call = np.repeat(np.tile([True, False], len(arr)), counts)
    total = len(pair_of)
    offsets = rng.integers(0, span + 1, total)
    flip = rng.random(total) < 0.5
    mags = np.where(is_call, rng.integers(10, 1200, total), rng.integers(1, 161, total)).astype(float)
    u, v = arr[pair_of, 0], arr[pair_of, 1]
    snd, rcv = np.where(flip, v, u), np.where(flip, u, v)
    # chronological, then sender, receiver, calls before texts; semesters are disjoint so the log stays sorted
    order = np.lexsort((~is_call, rcv, snd, offsets))
    stamps = (start + offsets[order].astype("timedelta64[s]")).tolist()
    senders, receivers, mags = snd[order].tolist(), rcv[order].tolist(), mags[order]
    kinds = [ContactKind.CALL if c else ContactKind.TEXT for c in is_call[order].tolist()]
    return [ContactRecord(ts, s, r, k, m) for ts, s, r, k, m in zip(stamps, senders, receivers, kinds, mags.tolist())]


def describe(world: SynthWorld) -> dict:
    cfg = world.config
    planted = {k: v for k, v in cfg.to_dict().items() if k != "schema"}
    transitions = []
    for lg, (s_t, s_t1) in zip(world.logs, zip(world.snapshots, world.snapshots[1:])):
        transitions.append({
            "from_semester": s_t.semester.index,
            "to_semester": s_t1.semester.index,
            "departed": len(lg.departed),
            "formation_candidates": int(len(lg.formed)),
            "formed": int(lg.formed.sum()),
            "dissolution_candidates": int(len(lg.dissolved)),
            "dissolved": int(lg.dissolved.sum()),
        })
    return {
        "planted": planted,
        "reference_agreement": world.reference_agreement,
        "expected_seed_density": world.expected_seed_density,
        "snapshots": [{"semester": s.semester.index, "label": s.semester.label, "nodes": len(s.nodes),
                       "edges": len(s.edges)} for s in world.snapshots],
        "transitions": transitions,
    }


def write_world(world: SynthWorld, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "contacts": out / "contacts.csv",
        "profiles": out / "profiles.csv",
        "nominations": out / "nominations.csv",
        "schema": out / "schema.json",
        "truth": out / "truth.json",
    }
    write_contact_log(world.contacts, paths["contacts"])
    write_profiles(world.schema, world.profiles.values(), paths["profiles"])
    write_nominations(world.nominations, paths["nominations"])
    save_schema(world.schema, paths["schema"])
    with open(paths["truth"], "w") as f:
        json.dump(describe(world), f, indent=2, sort_keys=True)
        f.write("\n")
    return paths


def with_seed(cfg: SynthConfig, seed: int) -> SynthConfig:
    return replace(cfg, seed=seed)
