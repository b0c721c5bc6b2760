"""Core ABAC data model: schemas, entities, filters, relations, rules,
policies, access logs, and the deny-by-default decision function.

Everything here is immutable after construction and every operation is a
pure function, so the types are safe to share across threads / processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import (
    ContradictionError,
    SchemaError,
    UnknownEntityError,
)

PERMIT = "permit"
DENY = "deny"

USER = "user"
OBJECT = "object"
SESSION = "session"
KINDS = (USER, OBJECT, SESSION)

#: Reserved sentinel written by missing-value imputation.  Raw data sources
#: may not use it as a legitimate attribute value.
UNK = "UNK"

#: Placeholder for "no value recorded"; replaced by UNK during imputation.
MISSING = ""


@dataclass(frozen=True)
class AttributeSchema:
    """The attribute universe: names, kinds, value ranges, and operations."""

    user_attrs: tuple[str, ...]
    object_attrs: tuple[str, ...]
    session_attrs: tuple[str, ...]
    operations: frozenset[str]
    ranges: Mapping[str, frozenset[str]]

    def __post_init__(self):
        object.__setattr__(self, "user_attrs", tuple(self.user_attrs))
        object.__setattr__(self, "object_attrs", tuple(self.object_attrs))
        object.__setattr__(self, "session_attrs", tuple(self.session_attrs))
        object.__setattr__(self, "operations", frozenset(self.operations))
        object.__setattr__(
            self, "ranges", {a: frozenset(v) for a, v in self.ranges.items()}
        )
        names = list(self.user_attrs) + list(self.object_attrs) + list(self.session_attrs)
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique across kinds")
        if not self.operations:
            raise SchemaError("schema needs at least one operation")
        for a in names:
            if a not in self.ranges:
                raise SchemaError(f"attribute {a!r} has no declared range")
            if not self.ranges[a]:
                raise SchemaError(f"attribute {a!r} has an empty range")
        extra = set(self.ranges) - set(names)
        if extra:
            raise SchemaError(f"ranges declared for unknown attributes: {sorted(extra)}")
        kinds = {}
        for a in self.user_attrs:
            kinds[a] = USER
        for a in self.object_attrs:
            kinds[a] = OBJECT
        for a in self.session_attrs:
            kinds[a] = SESSION
        object.__setattr__(self, "_kind_of", kinds)

    @property
    def attributes(self) -> tuple[str, ...]:
        """All attribute names in canonical order (user, object, session)."""
        return self.user_attrs + self.object_attrs + self.session_attrs

    def kind_of(self, attr: str) -> str:
        try:
            return self._kind_of[attr]
        except KeyError:
            raise SchemaError(f"unknown attribute {attr!r}") from None

    def attrs_of(self, kind: str) -> tuple[str, ...]:
        return {USER: self.user_attrs, OBJECT: self.object_attrs,
                SESSION: self.session_attrs}[kind]

    def check_entity(self, entity: "Entity") -> None:
        expected = self.attrs_of(entity.kind)
        if set(entity.attrs) != set(expected):
            raise SchemaError(
                f"entity {entity.id!r} has attributes {sorted(entity.attrs)}, "
                f"expected {sorted(expected)}"
            )
        for a, v in entity.attrs.items():
            if v != MISSING and v not in self.ranges[a]:
                raise SchemaError(
                    f"value {v!r} of attribute {a!r} on entity {entity.id!r} "
                    f"is outside the declared range"
                )

    def with_values(self, additions: Mapping[str, Iterable[str]]) -> "AttributeSchema":
        """Return a copy whose ranges include the given extra values."""
        ranges = {a: set(v) for a, v in self.ranges.items()}
        for a, vals in additions.items():
            ranges[a].update(vals)
        return AttributeSchema(self.user_attrs, self.object_attrs,
                               self.session_attrs, self.operations, ranges)

    def with_ranges(self, replacements: Mapping[str, Iterable[str]]) -> "AttributeSchema":
        """Return a copy with the given attributes' ranges replaced."""
        ranges = {a: set(v) for a, v in self.ranges.items()}
        for a, vals in replacements.items():
            ranges[a] = set(vals)
        return AttributeSchema(self.user_attrs, self.object_attrs,
                               self.session_attrs, self.operations, ranges)


@dataclass(frozen=True)
class Entity:
    """A user, object, or session with its attribute values."""

    id: str
    kind: str
    attrs: Mapping[str, str]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown entity kind {self.kind!r}")
        object.__setattr__(self, "attrs", dict(self.attrs))

    def value(self, attr: str) -> str:
        try:
            return self.attrs[attr]
        except KeyError:
            raise SchemaError(
                f"entity {self.id!r} ({self.kind}) has no attribute {attr!r}"
            ) from None


@dataclass(frozen=True, order=True, slots=True)
class FilterTuple:
    """One attribute condition: <attr, value> or <attr, !value>."""

    attr: str
    value: str
    positive: bool = True

    def __str__(self):
        bang = "" if self.positive else "!"
        return f"<{self.attr},{bang}{self.value}>"


@dataclass(frozen=True)
class AttributeFilter:
    """A conjunction of filter tuples.

    Construction rejects a filter holding both <a, v> and <a, !v>: such a
    filter is unsatisfiable and almost always indicates a mining bug, so we
    fail fast.  Multiple negative tuples on one attribute are fine (they
    mean "a is none of these values").
    """

    tuples: frozenset[FilterTuple] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "tuples", frozenset(self.tuples))
        seen: dict[tuple[str, str], bool] = {}
        for t in self.tuples:
            key = (t.attr, t.value)
            if key in seen and seen[key] != t.positive:
                raise ContradictionError(
                    f"filter contains both <{t.attr},{t.value}> and "
                    f"<{t.attr},!{t.value}>"
                )
            seen[key] = t.positive

    def __iter__(self) -> Iterator[FilterTuple]:
        return iter(self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def by_kind(self, schema: AttributeSchema) -> dict[str, frozenset[FilterTuple]]:
        """Partition the tuples into F_U / F_O / F_S views."""
        parts: dict[str, set[FilterTuple]] = {k: set() for k in KINDS}
        for t in self.tuples:
            parts[schema.kind_of(t.attr)].add(t)
        return {k: frozenset(v) for k, v in parts.items()}


@dataclass(frozen=True, order=True, slots=True)
class RelationTuple:
    """An equality (or inequality) condition between two same-range attributes.

    The pair is canonicalized so that ``left < right`` lexicographically;
    <a,b> and <b,a> therefore compare (and hash) equal.
    """

    left: str
    right: str
    positive: bool = True

    def __post_init__(self):
        if self.left == self.right:
            raise SchemaError(f"relation on a single attribute {self.left!r}")
        if self.left > self.right:
            left, right = self.right, self.left
            object.__setattr__(self, "left", left)
            object.__setattr__(self, "right", right)

    def __str__(self):
        bang = "" if self.positive else "!"
        return f"<{self.left},{bang}{self.right}>"


@dataclass(frozen=True)
class RelationCondition:
    """A conjunction of relation tuples."""

    tuples: frozenset[RelationTuple] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "tuples", frozenset(self.tuples))

    def __iter__(self) -> Iterator[RelationTuple]:
        return iter(self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)


@dataclass(frozen=True)
class Rule:
    """An ABAC rule: attribute filter, relation condition, and operation.

    ``op_positive=False`` is the negated-operation form: the rule applies to
    every operation except ``op``.
    """

    filter: AttributeFilter = AttributeFilter()
    relation: RelationCondition = RelationCondition()
    op: str = ""
    op_positive: bool = True

    def __str__(self):
        f = ",".join(sorted(str(t) for t in self.filter))
        r = ",".join(sorted(str(t) for t in self.relation))
        bang = "" if self.op_positive else "!"
        return f"<{{{f}}},{{{r}}},{bang}{self.op}>"


def make_rule(filters: Iterable[tuple] = (), relations: Iterable[tuple] = (),
              op: str = "", op_positive: bool = True) -> Rule:
    """Build a rule from plain tuples.

    ``filters`` items are (attr, value) or (attr, value, positive);
    ``relations`` items are (left, right) or (left, right, positive).
    """
    fts = frozenset(FilterTuple(*t) for t in filters)
    rts = frozenset(RelationTuple(*t) for t in relations)
    return Rule(AttributeFilter(fts), RelationCondition(rts), op, op_positive)


@dataclass(frozen=True)
class Policy:
    """A rule set over a schema, plus the entity table used for decisions."""

    schema: AttributeSchema
    rules: frozenset[Rule] = frozenset()
    entities: Mapping[str, Entity] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rules", frozenset(self.rules))
        object.__setattr__(self, "entities", dict(self.entities))

    def validate(self) -> None:
        """Check every rule and entity against the schema."""
        for e in self.entities.values():
            self.schema.check_entity(e)
        for rule in self.rules:
            if rule.op not in self.schema.operations:
                raise SchemaError(f"rule operation {rule.op!r} not in schema")
            for t in rule.filter:
                self.schema.kind_of(t.attr)
                if t.value not in self.schema.ranges[t.attr]:
                    raise SchemaError(
                        f"filter value {t.value!r} outside range of {t.attr!r}"
                    )
            for t in rule.relation:
                self.schema.kind_of(t.left)
                self.schema.kind_of(t.right)
                if self.schema.ranges[t.left] != self.schema.ranges[t.right]:
                    raise SchemaError(
                        f"relation <{t.left},{t.right}> joins attributes "
                        f"with different ranges"
                    )

    def with_rules(self, rules: Iterable[Rule]) -> "Policy":
        return Policy(self.schema, frozenset(rules), self.entities)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id {entity_id!r}") from None


@dataclass(frozen=True, slots=True)
class AccessRequest:
    """A request: user u asks to perform op on object o in session s."""

    user: str
    object: str
    session: str
    op: str


@dataclass(frozen=True, slots=True)
class AuthorizationTuple:
    """A logged request together with the decision the system made."""

    request: AccessRequest
    decision: str

    def __post_init__(self):
        if self.decision not in (PERMIT, DENY):
            raise SchemaError(f"decision must be permit/deny, got {self.decision!r}")

    @property
    def permitted(self) -> bool:
        return self.decision == PERMIT


@dataclass(frozen=True)
class AccessLog:
    """An access log plus the schema and entity table it refers to."""

    schema: AttributeSchema
    entities: Mapping[str, Entity]
    tuples: tuple[AuthorizationTuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "entities", dict(self.entities))
        object.__setattr__(self, "tuples", tuple(self.tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[AuthorizationTuple]:
        return iter(self.tuples)

    @property
    def positive(self) -> tuple[AuthorizationTuple, ...]:
        return tuple(t for t in self.tuples if t.permitted)

    @property
    def negative(self) -> tuple[AuthorizationTuple, ...]:
        return tuple(t for t in self.tuples if not t.permitted)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id {entity_id!r}") from None

    def resolve(self, request: AccessRequest) -> tuple[Entity, Entity, Entity]:
        return (self.entity(request.user), self.entity(request.object),
                self.entity(request.session))

    def replace(self, tuples: Iterable[AuthorizationTuple]) -> "AccessLog":
        return AccessLog(self.schema, self.entities, tuple(tuples))


def null_session(schema: AttributeSchema, session_id: str = "__null__") -> Entity:
    """The distinguished session for datasets without session data.

    All session attributes carry the UNK sentinel; run the log through
    missing-value imputation (or extend the ranges) before strict checks.
    """
    return Entity(session_id, SESSION, {a: UNK for a in schema.session_attrs})


def _owner(attr: str, schema: AttributeSchema,
           user: Entity, obj: Entity, session: Entity) -> Entity:
    kind = schema.kind_of(attr)
    return {USER: user, OBJECT: obj, SESSION: session}[kind]


def satisfies_filter(user: Entity, obj: Entity, session: Entity,
                     filt: AttributeFilter, schema: AttributeSchema) -> bool:
    """True iff every positive tuple matches and every negative one differs."""
    for t in filt:
        actual = _owner(t.attr, schema, user, obj, session).value(t.attr)
        if (actual == t.value) != t.positive:
            return False
    return True


def satisfies_relation(user: Entity, obj: Entity, session: Entity,
                       relation: RelationCondition, schema: AttributeSchema) -> bool:
    """True iff every positive pair is equal and every negative pair differs."""
    for t in relation:
        lv = _owner(t.left, schema, user, obj, session).value(t.left)
        rv = _owner(t.right, schema, user, obj, session).value(t.right)
        if (lv == rv) != t.positive:
            return False
    return True


def rule_satisfied(request: AccessRequest, rule: Rule, policy: Policy) -> bool:
    """True iff the request meets the rule's filter, relation, and operation."""
    op_match = (request.op == rule.op) if rule.op_positive else (request.op != rule.op)
    if not op_match:
        return False
    user = policy.entity(request.user)
    obj = policy.entity(request.object)
    session = policy.entity(request.session)
    return (satisfies_filter(user, obj, session, rule.filter, policy.schema)
            and satisfies_relation(user, obj, session, rule.relation, policy.schema))


def policy_decision(policy: Policy, request: AccessRequest) -> str:
    """Permit iff at least one rule is satisfied; deny otherwise."""
    for rule in policy.rules:
        if rule_satisfied(request, rule, policy):
            return PERMIT
    return DENY
