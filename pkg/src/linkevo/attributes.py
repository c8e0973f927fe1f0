"""Survey attribute schema, per-student profiles and pairwise agreement features.

Every attribute kind maps a pair of answers to an agreement in [0, 1]:

* binary / categorical -- 1 on an exact match, else 0
* ordinal(lo, hi)      -- ``1 - |a - b| / (hi - lo)``
* set-valued           -- Jaccard similarity, 1 when both sets are empty

A missing answer on either side gives the neutral value (0.5 by default).
The edge feature vector is the per-attribute agreements followed by the
common-neighbour count and the total agreement.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .graphcore import NodeId, Snapshot, common_neighbors

MISSING = None


class SchemaValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Binary:
    def validate(self, value) -> bool:
        if value in (0, 1, True, False):
            return bool(value)
        raise SchemaValidationError(f"binary value must be 0/1, got {value!r}")

    def agreement(self, a, b) -> float:
        return 1.0 if a == b else 0.0

    def parse(self, text: str):
        t = text.strip().lower()
        if t in ("1", "true", "yes", "y"):
            return True
        if t in ("0", "false", "no", "n"):
            return False
        raise SchemaValidationError(f"cannot parse binary value {text!r}")

    def format(self, value) -> str:
        return "1" if value else "0"

    def to_config(self) -> dict:
        return {"kind": "binary"}


@dataclass(frozen=True)
class Categorical:
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise SchemaValidationError("categorical attributes need at least 2 categories")

    def validate(self, value) -> int:
        if isinstance(value, bool) or int(value) != value or not 0 <= value < self.count:
            raise SchemaValidationError(f"category {value!r} outside 0..{self.count - 1}")
        return int(value)

    def agreement(self, a, b) -> float:
        return 1.0 if a == b else 0.0

    def parse(self, text: str):
        return self.validate(int(text))

    def format(self, value) -> str:
        return str(value)

    def to_config(self) -> dict:
        return {"kind": "categorical", "count": self.count}


@dataclass(frozen=True)
class Ordinal:
    lo: int
    hi: int

    def __post_init__(self):
        if not self.hi > self.lo:
            raise SchemaValidationError(f"ordinal range needs max > min, got [{self.lo}, {self.hi}]")

    def validate(self, value) -> int:
        if isinstance(value, bool) or int(value) != value or not self.lo <= value <= self.hi:
            raise SchemaValidationError(f"ordinal value {value!r} outside [{self.lo}, {self.hi}]")
        return int(value)

    def agreement(self, a, b) -> float:
        return 1.0 - abs(a - b) / (self.hi - self.lo)

    def parse(self, text: str):
        return self.validate(int(text))

    def format(self, value) -> str:
        return str(value)

    def to_config(self) -> dict:
        return {"kind": "ordinal", "min": self.lo, "max": self.hi}


@dataclass(frozen=True)
class SetValued:
    universe: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))
        if len(set(self.universe)) != len(self.universe):
            raise SchemaValidationError("set-valued universe has duplicate items")

    def validate(self, value) -> frozenset:
        items = frozenset(value)
        extra = items - set(self.universe)
        if extra:
            raise SchemaValidationError(f"items {sorted(extra)} not in the attribute universe")
        return items

    def agreement(self, a, b) -> float:
        union = len(a | b)
        if union == 0:
            return 1.0
        return len(a & b) / union

    def parse(self, text: str):
        return self.validate(x for x in text.split(";") if x)

    def format(self, value) -> str:
        # a lone separator marks the empty set so it stays distinct from a missing value
        if not value:
            return ";"
        order = {item: i for i, item in enumerate(self.universe)}
        return ";".join(sorted(value, key=order.__getitem__))

    def to_config(self) -> dict:
        return {"kind": "set", "universe": list(self.universe)}


AttributeKind = Union[Binary, Categorical, Ordinal, SetValued]


def agreement(kind: AttributeKind, a, b, missing: float = 0.5) -> float:
    """Agreement in [0, 1] between two answers to the same question."""
    if a is MISSING or b is MISSING:
        return missing
    return kind.agreement(kind.validate(a), kind.validate(b))


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: AttributeKind
    label: str = ""

    @property
    def display(self) -> str:
        return self.label or self.name.replace("_", " ").capitalize()


class AttributeSchema:
    """Ordered, name-unique attribute list."""

    def __init__(self, attributes: Sequence[Attribute]):
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise SchemaValidationError("attribute names must be unique")
        if not attributes:
            raise SchemaValidationError("schema is empty")
        self.attributes = tuple(attributes)
        self._index = {n: i for i, n in enumerate(names)}

    def __len__(self) -> int:
        return len(self.attributes)

    def __iter__(self):
        return iter(self.attributes)

    def __getitem__(self, i: int) -> Attribute:
        return self.attributes[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, AttributeSchema) and self.attributes == other.attributes

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaValidationError(f"unknown attribute {name!r}") from None

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def feature_names(self) -> list[str]:
        return self.names + [COMMON_NEIGHBORS, TOTAL_AGREEMENT]

    def feature_labels(self) -> list[str]:
        return [a.display for a in self.attributes] + ["Number of Common Neighbors", "Number of Common Traits"]

    def to_config(self) -> dict:
        return {"attributes": [{"name": a.name, "label": a.label, **a.kind.to_config()} for a in self.attributes]}

    @classmethod
    def from_config(cls, cfg: Mapping) -> "AttributeSchema":
        attrs = []
        for i, entry in enumerate(cfg.get("attributes", [])):
            try:
                name, kind = entry["name"], entry["kind"]
                if kind == "binary":
                    k = Binary()
                elif kind == "categorical":
                    k = Categorical(int(entry["count"]))
                elif kind == "ordinal":
                    k = Ordinal(int(entry["min"]), int(entry["max"]))
                elif kind == "set":
                    k = SetValued(tuple(entry["universe"]))
                else:
                    raise SchemaValidationError(f"unknown attribute kind {kind!r}")
            except KeyError as e:
                raise SchemaValidationError(f"attribute #{i} is missing field {e.args[0]!r}") from None
            attrs.append(Attribute(name, k, entry.get("label", "")))
        return cls(attrs)


COMMON_NEIGHBORS = "common_neighbors"
TOTAL_AGREEMENT = "total_agreement"


def load_schema(path: str | Path) -> AttributeSchema:
    with open(path) as f:
        return AttributeSchema.from_config(json.load(f))


def save_schema(schema: AttributeSchema, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(schema.to_config(), f, indent=2)
        f.write("\n")


def default_schema() -> AttributeSchema:
    """27 survey attributes: background, social/political views, habits and lifestyle.

    Behavioural traits are expanded into three items; racial equality and
    affirmative action, and welfare and social security, are asked separately.
    """
    likert = Ordinal(1, 5)
    hours = Ordinal(0, 5)
    attrs = [
        Attribute("major", Categorical(12), "Major"),
        Attribute("talkative", likert, "Is talkative"),
        Attribute("outgoing", likert, "Is outgoing"),
        Attribute("enthusiastic", likert, "Is enthusiastic"),
        Attribute("parental_income", Ordinal(1, 8), "Parental Income"),
        Attribute("race", Categorical(6), "Race"),
        Attribute("religion", Categorical(8), "Religion"),
        Attribute("politics", Ordinal(1, 7), "Political Views"),
        Attribute("abortion", likert, "Views on Abortion"),
        Attribute("marijuana", likert, "Views on Marijuana Legalization"),
        Attribute("homosexuality", likert, "Views on Homosexuality"),
        Attribute("gay_marriage", likert, "Views on Gay Marriage Legalization"),
        Attribute("premarital_sex", likert, "Views on Pre Marital Sex"),
        Attribute("welfare", likert, "Views on Social Welfare"),
        Attribute("social_security", likert, "Views on Social Security"),
        Attribute("racial_equality", likert, "Views on Equality"),
        Attribute("affirmative_action", likert, "Views on Affirmative Action"),
        Attribute("drinking", Ordinal(0, 4), "Hard Drinking"),
        Attribute("time_studying", hours, "Time Spent Studying"),
        Attribute("time_partying", hours, "Time Spent on Partying"),
        Attribute("time_socializing", hours, "Time Spent Socializing"),
        Attribute("time_volunteering", hours, "Time Spent on Volunteering"),
        Attribute("time_campaigning", hours, "Time Spent on Campaigning"),
        Attribute("time_exercising", hours, "Time Spent on Exercising"),
        Attribute("time_clubs", hours, "Time Spent at College Clubs"),
        Attribute("classes", SetValued(tuple(f"class{i:02d}" for i in range(40))), "Classes Taken"),
        Attribute("clubs", SetValued(tuple(f"club{i:02d}" for i in range(20))), "Clubs Joined"),
    ]
    return AttributeSchema(attrs)


@dataclass(frozen=True)
class AgreementConfig:
    missing_value: float = 0.5
    total_mode: str = "soft"   # "soft" sums agreements, "hard" counts entries >= hard_threshold
    hard_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.missing_value <= 1.0:
            raise ValueError("missing_value must lie in [0, 1]")
        if self.total_mode not in ("soft", "hard"):
            raise ValueError(f"total_mode must be 'soft' or 'hard', got {self.total_mode!r}")

    def total(self, agreements: np.ndarray) -> np.ndarray:
        if self.total_mode == "soft":
            return agreements.sum(axis=-1)
        return (agreements >= self.hard_threshold).sum(axis=-1).astype(float)


@dataclass(frozen=True)
class Profile:
    node: NodeId
    semester: int
    values: tuple

    @classmethod
    def create(cls, schema: AttributeSchema, node: NodeId, semester: int,
               values: Mapping[str, object] | Sequence) -> "Profile":
        if isinstance(values, Mapping):
            unknown = set(values) - set(schema.names)
            if unknown:
                raise SchemaValidationError(f"unknown attributes {sorted(unknown)}")
            raw = [values.get(n, MISSING) for n in schema.names]
        else:
            raw = list(values)
            if len(raw) != len(schema):
                raise SchemaValidationError(f"expected {len(schema)} values, got {len(raw)}")
        checked = tuple(MISSING if v is MISSING else a.kind.validate(v) for a, v in zip(schema, raw))
        return cls(node, semester, checked)

    def value(self, schema: AttributeSchema, name: str):
        return self.values[schema.index(name)]


ProfileTable = Mapping[tuple[int, NodeId], Profile]


@dataclass
class EdgeFeatureVector:
    agreements: np.ndarray
    common_neighbor_count: int
    total_agreement: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.agreements, [float(self.common_neighbor_count), self.total_agreement]])

    def __len__(self) -> int:
        return len(self.agreements) + 2


def agreement_vector(schema: AttributeSchema, p_u: Profile, p_v: Profile,
                     config: AgreementConfig = AgreementConfig()) -> np.ndarray:
    return np.array([agreement(a.kind, x, y, config.missing_value)
                     for a, x, y in zip(schema, p_u.values, p_v.values)])


def edge_features(schema: AttributeSchema, p_u: Profile, p_v: Profile, snap: Snapshot,
                  config: AgreementConfig = AgreementConfig()) -> EdgeFeatureVector:
    sem = snap.semester.index
    if p_u.semester != sem or p_v.semester != sem:
        raise ValueError(f"profiles are from semesters {p_u.semester}/{p_v.semester}, snapshot is {sem}")
    agr = agreement_vector(schema, p_u, p_v, config)
    return EdgeFeatureVector(agr, common_neighbors(snap, p_u.node, p_v.node), float(config.total(agr)))


# -- vectorized path ----------------------------------------------------------

@dataclass
class EncodedProfiles:
    """Column-wise numeric encoding of a profile collection, for batch agreement."""

    nodes: list[NodeId]
    row: dict[NodeId, int]
    scalars: dict[int, np.ndarray] = field(default_factory=dict)      # NaN marks missing
    sets: dict[int, np.ndarray] = field(default_factory=dict)         # bool membership
    set_missing: dict[int, np.ndarray] = field(default_factory=dict)


def encode_profiles(schema: AttributeSchema, profiles: Iterable[Profile]) -> EncodedProfiles:
    plist = sorted(profiles, key=lambda p: p.node)
    nodes = [p.node for p in plist]
    enc = EncodedProfiles(nodes, {n: i for i, n in enumerate(nodes)})
    for j, attr in enumerate(schema):
        col = [p.values[j] for p in plist]
        if isinstance(attr.kind, SetValued):
            pos = {item: k for k, item in enumerate(attr.kind.universe)}
            member = np.zeros((len(col), len(pos)), dtype=bool)
            miss = np.zeros(len(col), dtype=bool)
            for i, v in enumerate(col):
                if v is MISSING:
                    miss[i] = True
                else:
                    member[i, [pos[x] for x in v]] = True
            enc.sets[j] = member
            enc.set_missing[j] = miss
        else:
            enc.scalars[j] = np.array([np.nan if v is MISSING else float(v) for v in col])
    return enc


def pairwise_agreements(schema: AttributeSchema, enc: EncodedProfiles, rows_u: np.ndarray, rows_v: np.ndarray,
                        config: AgreementConfig = AgreementConfig()) -> np.ndarray:
    """Agreement matrix of shape (n_pairs, len(schema)) for encoded row-index pairs."""
    rows_u = np.asarray(rows_u, dtype=int)
    rows_v = np.asarray(rows_v, dtype=int)
    out = np.empty((len(rows_u), len(schema)))
    for j, attr in enumerate(schema):
        kind = attr.kind
        if isinstance(kind, SetValued):
            a, b = enc.sets[j][rows_u], enc.sets[j][rows_v]
            inter = (a & b).sum(axis=1)
            union = (a | b).sum(axis=1)
            val = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
            miss = enc.set_missing[j][rows_u] | enc.set_missing[j][rows_v]
        else:
            a, b = enc.scalars[j][rows_u], enc.scalars[j][rows_v]
            miss = np.isnan(a) | np.isnan(b)
            if isinstance(kind, Ordinal):
                val = 1.0 - np.abs(a - b) / (kind.hi - kind.lo)
            else:
                val = (a == b).astype(float)
        out[:, j] = np.where(miss, config.missing_value, val)
    return out


def feature_matrix(schema: AttributeSchema, enc: EncodedProfiles, snap: Snapshot, pairs: Sequence[tuple],
                   config: AgreementConfig = AgreementConfig()) -> np.ndarray:
    """Stack the edge feature vectors of ``pairs`` into an (n_pairs, len(schema) + 2) array."""
    width = len(schema) + 2
    if not pairs:
        return np.empty((0, width))
    ru = np.array([enc.row[u] for u, _ in pairs])
    rv = np.array([enc.row[v] for _, v in pairs])
    agr = pairwise_agreements(schema, enc, ru, rv, config)
    cn = np.array([common_neighbors(snap, u, v) for u, v in pairs], dtype=float)
    return np.column_stack([agr, cn, config.total(agr)])


# -- profile CSV --------------------------------------------------------------

PROFILE_HEADER = ["semester", "node", "attr_name", "value"]


def write_profiles(schema: AttributeSchema, profiles: Iterable[Profile], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PROFILE_HEADER)
        for p in sorted(profiles, key=lambda p: (p.semester, p.node)):
            for attr, v in zip(schema, p.values):
                w.writerow([p.semester, p.node, attr.name, "" if v is MISSING else attr.kind.format(v)])


def read_profiles(schema: AttributeSchema, path: str | Path, strict: bool = True) -> dict[tuple[int, NodeId], Profile]:
    """Read long-format profile rows; attributes never mentioned for a student are missing."""
    raw: dict[tuple[int, NodeId], dict[str, object]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != PROFILE_HEADER:
            raise SchemaValidationError(f"{path}: expected header {PROFILE_HEADER}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (int(row["semester"]), int(row["node"]))
                attr = schema[schema.index(row["attr_name"])]
                text = row["value"] or ""
                value = MISSING if text == "" else attr.kind.parse(text)
            except (ValueError, TypeError) as e:
                if strict:
                    raise SchemaValidationError(f"{path}:{lineno}: {e}") from None
                continue
            raw.setdefault(key, {})[attr.name] = value
    return {k: Profile.create(schema, k[1], k[0], v) for k, v in sorted(raw.items())}


def profiles_for_semester(profiles: ProfileTable, semester: int) -> list[Profile]:
    return [p for (s, _), p in sorted(profiles.items()) if s == semester]
