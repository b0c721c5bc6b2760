"""File formats: policy JSON documents, the flat log CSV, discretizer specs.

All writers emit canonically sorted content so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Mapping

from .errors import DataError, SchemaError
from .model import (
    DENY,
    KINDS,
    MISSING,
    OBJECT,
    PERMIT,
    SESSION,
    UNK,
    USER,
    AccessLog,
    AccessRequest,
    AttributeFilter,
    AttributeSchema,
    AuthorizationTuple,
    Entity,
    FilterTuple,
    Policy,
    RelationCondition,
    RelationTuple,
    Rule,
)

POLICY_FORMAT = "abacmine-policy"
POLICY_VERSION = 1

_KIND_PREFIX = {USER: "u_", OBJECT: "o_", SESSION: "s_"}


def _polarity(positive: bool) -> str:
    return "positive" if positive else "negative"


def _is_positive(polarity: str) -> bool:
    if polarity not in ("positive", "negative"):
        raise DataError(f"bad polarity {polarity!r}")
    return polarity == "positive"


def schema_to_dict(schema: AttributeSchema) -> dict:
    return {
        "user_attrs": list(schema.user_attrs),
        "object_attrs": list(schema.object_attrs),
        "session_attrs": list(schema.session_attrs),
        "operations": sorted(schema.operations),
        "ranges": {a: sorted(v) for a, v in sorted(schema.ranges.items())},
    }


def schema_from_dict(doc: Mapping) -> AttributeSchema:
    try:
        return AttributeSchema(
            user_attrs=tuple(doc["user_attrs"]),
            object_attrs=tuple(doc["object_attrs"]),
            session_attrs=tuple(doc["session_attrs"]),
            operations=frozenset(doc["operations"]),
            ranges={a: frozenset(v) for a, v in doc["ranges"].items()},
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed schema document: {exc}") from exc


def rule_to_dict(rule: Rule) -> dict:
    return {
        "filter": [
            {"attr": t.attr, "value": t.value, "polarity": _polarity(t.positive)}
            for t in sorted(rule.filter)
        ],
        "relation": [
            {"left": t.left, "right": t.right, "polarity": _polarity(t.positive)}
            for t in sorted(rule.relation)
        ],
        "op": rule.op,
        "op_polarity": _polarity(rule.op_positive),
    }


def rule_from_dict(doc: Mapping) -> Rule:
    try:
        fts = frozenset(
            FilterTuple(t["attr"], t["value"], _is_positive(t["polarity"]))
            for t in doc["filter"]
        )
        rts = frozenset(
            RelationTuple(t["left"], t["right"], _is_positive(t["polarity"]))
            for t in doc["relation"]
        )
        return Rule(AttributeFilter(fts), RelationCondition(rts),
                    doc["op"], _is_positive(doc["op_polarity"]))
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed rule document: {exc}") from exc


def policy_to_dict(policy: Policy, include_entities: bool = True) -> dict:
    doc = {
        "format": POLICY_FORMAT,
        "version": POLICY_VERSION,
        "schema": schema_to_dict(policy.schema),
        "rules": sorted((rule_to_dict(r) for r in policy.rules),
                        key=lambda d: json.dumps(d, sort_keys=True)),
    }
    if include_entities and policy.entities:
        doc["entities"] = [
            {"id": e.id, "kind": e.kind, "attrs": dict(sorted(e.attrs.items()))}
            for e in sorted(policy.entities.values(), key=lambda e: (e.kind, e.id))
        ]
    return doc


def policy_from_dict(doc: Mapping) -> Policy:
    if doc.get("format") != POLICY_FORMAT:
        raise DataError(f"not a {POLICY_FORMAT} document")
    if doc.get("version") != POLICY_VERSION:
        raise DataError(f"unsupported policy document version {doc.get('version')!r}")
    schema = schema_from_dict(doc["schema"])
    rules = frozenset(rule_from_dict(r) for r in doc.get("rules", []))
    entities = {
        e["id"]: Entity(e["id"], e["kind"], e["attrs"])
        for e in doc.get("entities", [])
    }
    policy = Policy(schema, rules, entities)
    policy.validate()
    return policy


def dumps_policy(policy: Policy, include_entities: bool = True) -> str:
    return json.dumps(policy_to_dict(policy, include_entities),
                      indent=2, sort_keys=True) + "\n"


def save_policy(policy: Policy, path: str | Path,
                include_entities: bool = True) -> None:
    Path(path).write_text(dumps_policy(policy, include_entities))


def load_policy(path: str | Path) -> Policy:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return policy_from_dict(doc)


# ---------------------------------------------------------------------------
# Log CSV: header uid,oid,sid,op,decision then one column per attribute,
# prefixed by owning kind (u_dept, o_type, s_location).  Denormalized rows
# are the interchange format between all stages.
# ---------------------------------------------------------------------------

def _log_columns(schema: AttributeSchema) -> list[str]:
    cols = ["uid", "oid", "sid", "op", "decision"]
    cols += [f"u_{a}" for a in schema.user_attrs]
    cols += [f"o_{a}" for a in schema.object_attrs]
    cols += [f"s_{a}" for a in schema.session_attrs]
    return cols


def log_to_csv(log: AccessLog) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_log_columns(log.schema))
    for t in log.tuples:
        u, o, s = log.resolve(t.request)
        row = [u.id, o.id, s.id, t.request.op, t.decision]
        row += [u.attrs[a] for a in log.schema.user_attrs]
        row += [o.attrs[a] for a in log.schema.object_attrs]
        row += [s.attrs[a] for a in log.schema.session_attrs]
        writer.writerow(row)
    return buf.getvalue()


def save_log_csv(log: AccessLog, path: str | Path) -> None:
    Path(path).write_text(log_to_csv(log))


def _split_attr_columns(names: list[str]) -> dict[str, tuple[str, str]]:
    """Map CSV column name -> (kind, attribute name)."""
    out = {}
    for name in names:
        if name.startswith("u_"):
            out[name] = (USER, name[2:])
        elif name.startswith("o_"):
            out[name] = (OBJECT, name[2:])
        elif name.startswith("s_"):
            out[name] = (SESSION, name[2:])
        else:
            raise DataError(f"unrecognized log column {name!r}")
    return out


def parse_log_csv(text: str, schema: AttributeSchema | None = None) -> AccessLog:
    """Parse the flat CSV form back into an AccessLog.

    With no schema the attribute ranges and operation set are inferred from
    the observed values.  Empty cells are kept as the missing-value marker;
    a literal "UNK" cell is rejected because it would collide with the
    imputation sentinel.
    """
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty log CSV") from None
    fixed = ["uid", "oid", "sid", "op", "decision"]
    if header[: len(fixed)] != fixed:
        raise DataError(f"log CSV must start with columns {fixed}, got {header[:5]}")
    attr_cols = _split_attr_columns(header[len(fixed):])
    col_names = header[len(fixed):]

    by_kind: dict[str, list[str]] = {USER: [], OBJECT: [], SESSION: []}
    for name in col_names:
        kind, attr = attr_cols[name]
        by_kind[kind].append(attr)
    if schema is not None:
        for kind, attrs in by_kind.items():
            if tuple(attrs) != tuple(schema.attrs_of(kind)):
                raise DataError(
                    f"log CSV {kind} attributes {attrs} do not match schema "
                    f"{list(schema.attrs_of(kind))}"
                )

    entities: dict[str, Entity] = {}
    tuples: list[AuthorizationTuple] = []
    observed: dict[str, set[str]] = {attr: set() for _, attr in attr_cols.values()}
    ops: set[str] = set()

    kind_slices = {}
    offset = 0
    for kind in KINDS:
        n = len(by_kind[kind])
        kind_slices[kind] = slice(offset, offset + n)
        offset += n

    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(
                f"line {lineno}: expected {len(header)} columns, got {len(row)}"
            )
        uid, oid, sid, op, decision = row[:5]
        if decision not in (PERMIT, DENY):
            raise DataError(f"line {lineno}: bad decision {decision!r}")
        values = row[5:]
        if any(v == UNK for v in values):
            raise DataError(
                f"line {lineno}: literal {UNK!r} collides with the reserved "
                f"missing-value sentinel"
            )
        ids = {USER: uid, OBJECT: oid, SESSION: sid}
        for kind in KINDS:
            attrs = dict(zip(by_kind[kind], values[kind_slices[kind]]))
            ent = Entity(ids[kind], kind, attrs)
            prev = entities.get(ent.id)
            if prev is None:
                entities[ent.id] = ent
            elif prev.kind != ent.kind or prev.attrs != ent.attrs:
                raise DataError(
                    f"line {lineno}: entity {ent.id!r} redefined with "
                    f"different attributes"
                )
            for a, v in attrs.items():
                observed[a].add(v)
        ops.add(op)
        tuples.append(AuthorizationTuple(AccessRequest(uid, oid, sid, op), decision))

    if schema is None:
        ranges = {a: (vals - {MISSING}) or {MISSING} for a, vals in observed.items()}
        schema = AttributeSchema(
            user_attrs=tuple(by_kind[USER]),
            object_attrs=tuple(by_kind[OBJECT]),
            session_attrs=tuple(by_kind[SESSION]),
            operations=frozenset(ops) or frozenset({"op"}),
            ranges=ranges,
        )
    else:
        for t in tuples:
            if t.request.op not in schema.operations:
                raise DataError(f"operation {t.request.op!r} not in schema")
        for ent in entities.values():
            try:
                schema.check_entity(ent)
            except SchemaError as exc:
                raise DataError(str(exc)) from exc
    return AccessLog(schema, entities, tuple(tuples))


def load_log_csv(path: str | Path, schema: AttributeSchema | None = None) -> AccessLog:
    return parse_log_csv(Path(path).read_text(), schema)
