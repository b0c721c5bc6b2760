"""Turn access logs into clustering-ready categorical code matrices.

The canonical feature order is: user attributes, object attributes, session
attributes, then the operation.  Identical rows are merged into one record
with an integer weight, and records are kept lexicographically sorted so
every downstream computation is order-independent and reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BinningError, DataError, EncodingError
from .model import (
    MISSING,
    UNK,
    AccessLog,
    AttributeSchema,
    AuthorizationTuple,
    Entity,
)

OP_FEATURE = "op"


@dataclass(frozen=True)
class FeatureEncoder:
    """Maps attribute values to small integer codes, one dictionary per feature."""

    feature_names: tuple[str, ...]
    categories: tuple[tuple[str, ...], ...]

    @classmethod
    def from_schema(cls, schema: AttributeSchema) -> "FeatureEncoder":
        names = list(schema.attributes) + [OP_FEATURE]
        cats = [tuple(sorted(schema.ranges[a])) for a in schema.attributes]
        cats.append(tuple(sorted(schema.operations)))
        return cls(tuple(names), tuple(cats))

    def __post_init__(self):
        maps = tuple({v: i for i, v in enumerate(cat)} for cat in self.categories)
        object.__setattr__(self, "_code_maps", maps)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_attr_features(self) -> int:
        """Feature count excluding the trailing operation feature."""
        return len(self.feature_names) - 1

    @property
    def op_index(self) -> int:
        return len(self.feature_names) - 1

    def n_categories(self) -> np.ndarray:
        return np.array([len(c) for c in self.categories], dtype=np.int64)

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise EncodingError(f"unknown feature {name!r}") from None

    def code(self, feature: int, value: str) -> int:
        try:
            return self._code_maps[feature][value]
        except KeyError:
            raise EncodingError(
                f"value {value!r} is outside the declared range of feature "
                f"{self.feature_names[feature]!r}"
            ) from None

    def code_or_none(self, feature: int, value: str) -> int | None:
        return self._code_maps[feature].get(value)

    def value(self, feature: int, code: int) -> str:
        return self.categories[feature][code]

    def same_range_pairs(self) -> tuple[tuple[int, int], ...]:
        """Attribute feature pairs (i < j) with identical value ranges.

        Only such pairs are candidates for relation conditions; the
        operation feature is excluded.
        """
        n = self.n_attr_features
        sets = [frozenset(self.categories[i]) for i in range(n)]
        return tuple(
            (i, j) for i in range(n) for j in range(i + 1, n) if sets[i] == sets[j]
        )


@dataclass(frozen=True)
class RecordSet:
    """Deduplicated categorical records: a code matrix plus per-row weights."""

    codes: np.ndarray
    weights: np.ndarray
    encoder: FeatureEncoder

    def __post_init__(self):
        if self.codes.ndim != 2 or self.codes.shape[0] != self.weights.shape[0]:
            raise EncodingError("codes and weights shapes disagree")
        if self.codes.shape[1] != self.encoder.n_features:
            raise EncodingError("record width does not match the encoder")
        if len(self.weights) and self.weights.min() <= 0:
            raise EncodingError("record weights must be positive")

    def __len__(self) -> int:
        return self.codes.shape[0]

    @property
    def n_features(self) -> int:
        return self.codes.shape[1]

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())

    def subset(self, mask: np.ndarray) -> "RecordSet":
        return RecordSet(self.codes[mask], self.weights[mask], self.encoder)

    def decode_row(self, i: int) -> dict[str, str]:
        enc = self.encoder
        return {
            enc.feature_names[f]: enc.value(f, int(self.codes[i, f]))
            for f in range(enc.n_features)
        }


def _entity_codes(log: AccessLog, encoder: FeatureEncoder) -> dict[str, np.ndarray]:
    """Pre-encode every entity's attribute vector once."""
    schema = log.schema
    spans = {
        "user": (0, schema.user_attrs),
        "object": (len(schema.user_attrs), schema.object_attrs),
        "session": (len(schema.user_attrs) + len(schema.object_attrs),
                    schema.session_attrs),
    }
    out = {}
    for ent in log.entities.values():
        start, attrs = spans[ent.kind]
        vec = np.empty(len(attrs), dtype=np.int32)
        for i, a in enumerate(attrs):
            v = ent.attrs[a]
            if v == MISSING:
                raise EncodingError(
                    f"entity {ent.id!r} has a missing value for {a!r}; "
                    f"run impute_missing first"
                )
            vec[i] = encoder.code(start + i, v)
        out[ent.id] = vec
    return out


def encode_requests(log: AccessLog, tuples: Sequence[AuthorizationTuple] | None = None,
                    encoder: FeatureEncoder | None = None) -> np.ndarray:
    """Encode tuples (default: the whole log) one row each, no deduplication."""
    encoder = encoder or FeatureEncoder.from_schema(log.schema)
    tuples = log.tuples if tuples is None else tuples
    ent = _entity_codes(log, encoder)
    m = encoder.n_features
    rows = np.empty((len(tuples), m), dtype=np.int32)
    op_f = encoder.op_index
    for i, t in enumerate(tuples):
        q = t.request
        u, o, s = ent[q.user], ent[q.object], ent[q.session]
        rows[i, : len(u)] = u
        rows[i, len(u): len(u) + len(o)] = o
        rows[i, len(u) + len(o): m - 1] = s
        rows[i, op_f] = encoder.code(op_f, q.op)
    return rows


def dedup_records(rows: np.ndarray, encoder: FeatureEncoder) -> RecordSet:
    """Merge identical rows, summing multiplicities; rows come out sorted."""
    if rows.shape[0] == 0:
        return RecordSet(rows.reshape(0, encoder.n_features).astype(np.int32),
                         np.zeros(0, dtype=np.int64), encoder)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    return RecordSet(np.ascontiguousarray(uniq, dtype=np.int32),
                     counts.astype(np.int64), encoder)


def encode_log(log: AccessLog, which: str = "positive",
               schema: AttributeSchema | None = None) -> RecordSet:
    """Encode the selected side of the log as weighted categorical records."""
    if which not in ("positive", "negative", "all"):
        raise EncodingError(f"which must be positive/negative/all, got {which!r}")
    schema = schema or log.schema
    encoder = FeatureEncoder.from_schema(schema)
    selected = {
        "positive": log.positive,
        "negative": log.negative,
        "all": log.tuples,
    }[which]
    rows = encode_requests(log, selected, encoder)
    return dedup_records(rows, encoder)


def impute_missing(log: AccessLog) -> AccessLog:
    """Replace every missing attribute value with the UNK sentinel.

    UNK is added to the range of each affected attribute.  Idempotent: a log
    with no missing values is returned unchanged.
    """
    touched: set[str] = set()
    new_entities: dict[str, Entity] = {}
    for ent in log.entities.values():
        if MISSING in ent.attrs.values():
            attrs = {a: (UNK if v == MISSING else v) for a, v in ent.attrs.items()}
            touched.update(a for a, v in ent.attrs.items() if v == MISSING)
            new_entities[ent.id] = Entity(ent.id, ent.kind, attrs)
        else:
            new_entities[ent.id] = ent
    if not touched:
        return log
    ranges = {a: set(v) for a, v in log.schema.ranges.items()}
    for a in touched:
        ranges[a].discard(MISSING)
        ranges[a].add(UNK)
    schema = log.schema.with_ranges(ranges)
    return AccessLog(schema, new_entities, log.tuples)


@dataclass(frozen=True)
class Bin:
    label: str
    lo: float
    hi: float


@dataclass(frozen=True)
class Discretizer:
    """Per-attribute numeric binning; bins are half-open [lo, hi)."""

    bins: Mapping[str, tuple[Bin, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "bins", {a: tuple(b) for a, b in self.bins.items()})
        for attr, bins in self.bins.items():
            labels = [b.label for b in bins]
            if len(set(labels)) != len(labels):
                raise BinningError(f"duplicate bin labels for {attr!r}")

    def apply(self, attr: str, raw: str) -> str:
        try:
            x = float(raw)
        except ValueError:
            raise BinningError(
                f"value {raw!r} of {attr!r} is not numeric"
            ) from None
        for b in self.bins[attr]:
            if b.lo <= x < b.hi:
                return b.label
        raise BinningError(f"value {raw!r} of {attr!r} falls outside every bin")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Discretizer":
        try:
            bins = {
                attr: tuple(Bin(b["label"], float(b["lo"]), float(b["hi"]))
                            for b in spec["bins"])
                for attr, spec in doc.items()
            }
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed discretizer spec: {exc}") from exc
        return cls(bins)

    @classmethod
    def load(cls, path: str | Path) -> "Discretizer":
        return cls.from_dict(json.loads(Path(path).read_text()))


def discretize(log: AccessLog, disc: Discretizer) -> AccessLog:
    """Replace numeric values with their bin labels; other attributes pass through."""
    if not disc.bins:
        return log
    new_entities = {}
    for ent in log.entities.values():
        attrs = {
            a: (disc.apply(a, v) if a in disc.bins and v != MISSING else v)
            for a, v in ent.attrs.items()
        }
        new_entities[ent.id] = Entity(ent.id, ent.kind, attrs)
    replacements = {a: {b.label for b in bins} for a, bins in disc.bins.items()
                    if a in log.schema.ranges}
    schema = log.schema.with_ranges(replacements)
    return AccessLog(schema, new_entities, log.tuples)
