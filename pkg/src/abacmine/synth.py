"""Ground-truth policy and access-log synthesis for evaluation runs.

Complete logs brute-force the whole (user, object, session, operation)
product and label each request with the ground-truth decision; sparse and
noisy variants are derived from complete logs.  Every generator is a pure
function of its spec and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .decisions import bulk_decisions
from .errors import GenerationError, LogSizeError
from .model import (
    DENY,
    OBJECT,
    PERMIT,
    SESSION,
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
from .preprocess import FeatureEncoder
from .seeds import substream

DEFAULT_TUPLE_CAP = 10_000_000

#: Optional per-kind attribute sampler: rng -> {attr: value}.  Used by the
#: builtin policies to generate correlated, realistic entity profiles.
Sampler = Callable[[np.random.Generator], dict[str, str]]


@dataclass(frozen=True)
class UniverseSpec:
    schema: AttributeSchema
    n_users: int
    n_objects: int
    n_sessions: int
    seed: int = 0
    samplers: Mapping[str, Sampler] = field(default_factory=dict)

    def __post_init__(self):
        if min(self.n_users, self.n_objects, self.n_sessions) < 1:
            raise GenerationError("entity counts must be at least 1")


def _uniform_attrs(schema: AttributeSchema, kind: str,
                   rng: np.random.Generator) -> dict[str, str]:
    out = {}
    for a in schema.attrs_of(kind):
        vals = sorted(schema.ranges[a])
        out[a] = vals[int(rng.integers(len(vals)))]
    return out


def build_universe(spec: UniverseSpec) -> dict[str, Entity]:
    """Generate the entity population; uniform draws unless a sampler overrides."""
    entities: dict[str, Entity] = {}
    counts = {USER: spec.n_users, OBJECT: spec.n_objects, SESSION: spec.n_sessions}
    prefix = {USER: "u", OBJECT: "o", SESSION: "s"}
    for kind in (USER, OBJECT, SESSION):
        rng = substream(spec.seed, "universe", kind)
        sampler = spec.samplers.get(kind)
        width = max(4, len(str(counts[kind])))
        for i in range(counts[kind]):
            attrs = sampler(rng) if sampler else _uniform_attrs(spec.schema, kind, rng)
            ent = Entity(f"{prefix[kind]}{i:0{width}d}", kind, attrs)
            spec.schema.check_entity(ent)
            entities[ent.id] = ent
    return entities


@dataclass(frozen=True)
class RandomPolicySpec:
    n_rules: int
    filters_per_rule: tuple[int, int] = (1, 3)
    relations_per_rule: tuple[int, int] = (0, 1)
    negative_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rules < 0:
            raise GenerationError("n_rules must be non-negative")
        for name in ("filters_per_rule", "relations_per_rule"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise GenerationError(f"bad {name} bounds ({lo}, {hi})")
        if not 0.0 <= self.negative_fraction <= 1.0:
            raise GenerationError("negative_fraction must be in [0, 1]")


def generate_random_policy(schema: AttributeSchema, spec: RandomPolicySpec,
                           entities: Mapping[str, Entity] | None = None) -> Policy:
    """Draw pairwise-distinct, satisfiable rules uniformly at random."""
    attrs = list(schema.attributes)
    if spec.filters_per_rule[1] > len(attrs):
        raise GenerationError(
            f"cannot place {spec.filters_per_rule[1]} filters over "
            f"{len(attrs)} attributes"
        )
    pairs = [(a, b) for i, a in enumerate(attrs) for b in attrs[i + 1:]
             if schema.ranges[a] == schema.ranges[b]]
    if spec.relations_per_rule[0] > len(pairs):
        raise GenerationError(
            f"schema has only {len(pairs)} same-range attribute pairs, "
            f"{spec.relations_per_rule[0]} relations requested"
        )
    rng = substream(spec.seed, "random-policy")
    ops = sorted(schema.operations)
    rules: set[Rule] = set()
    attempts = 0
    while len(rules) < spec.n_rules:
        attempts += 1
        if attempts > 100 * max(spec.n_rules, 1):
            raise GenerationError(
                f"could not draw {spec.n_rules} distinct rules; the spec "
                f"allows too few combinations"
            )
        nf = int(rng.integers(spec.filters_per_rule[0], spec.filters_per_rule[1] + 1))
        picked = rng.choice(len(attrs), size=nf, replace=False)
        fts = set()
        for ai in sorted(int(i) for i in picked):
            a = attrs[ai]
            vals = sorted(schema.ranges[a])
            v = vals[int(rng.integers(len(vals)))]
            fts.add(FilterTuple(a, v, bool(rng.random() >= spec.negative_fraction)))
        hi = min(spec.relations_per_rule[1], len(pairs))
        lo = spec.relations_per_rule[0]
        nr = int(rng.integers(lo, hi + 1)) if hi >= lo else 0
        rts = set()
        if nr:
            for pi in sorted(int(i) for i in rng.choice(len(pairs), size=nr,
                                                        replace=False)):
                a, b = pairs[pi]
                rts.add(RelationTuple(a, b, bool(rng.random() >= spec.negative_fraction)))
        op = ops[int(rng.integers(len(ops)))]
        rules.add(Rule(AttributeFilter(frozenset(fts)),
                       RelationCondition(frozenset(rts)), op, True))
    policy = Policy(schema, frozenset(rules), entities or {})
    policy.validate()
    return policy


def generate_complete_log(policy: Policy,
                          cap: int = DEFAULT_TUPLE_CAP) -> AccessLog:
    """One authorization tuple per (u, o, s, op) combination, in canonical order."""
    by_kind: dict[str, list[Entity]] = {USER: [], OBJECT: [], SESSION: []}
    for ent in policy.entities.values():
        by_kind[ent.kind].append(ent)
    for kind, ents in by_kind.items():
        if not ents:
            raise GenerationError(f"policy has no {kind} entities to enumerate")
        ents.sort(key=lambda e: e.id)
    ops = sorted(policy.schema.operations)
    nu, no, ns, nop = (len(by_kind[USER]), len(by_kind[OBJECT]),
                       len(by_kind[SESSION]), len(ops))
    total = nu * no * ns * nop
    if total > cap:
        raise LogSizeError(
            f"complete log would hold {nu}*{no}*{ns}*{nop} = {total} tuples, "
            f"above the cap of {cap}"
        )

    encoder = FeatureEncoder.from_schema(policy.schema)
    schema = policy.schema

    def kind_matrix(ents, attrs, offset):
        mat = np.empty((len(ents), len(attrs)), dtype=np.int32)
        for i, e in enumerate(ents):
            for j, a in enumerate(attrs):
                mat[i, j] = encoder.code(offset + j, e.attrs[a])
        return mat

    nau, nao = len(schema.user_attrs), len(schema.object_attrs)
    U = kind_matrix(by_kind[USER], schema.user_attrs, 0)
    O = kind_matrix(by_kind[OBJECT], schema.object_attrs, nau)
    S = kind_matrix(by_kind[SESSION], schema.session_attrs, nau + nao)
    op_codes = np.array([encoder.code(encoder.op_index, op) for op in ops],
                        dtype=np.int32)

    uidx = np.repeat(np.arange(nu), no * ns * nop)
    oidx = np.tile(np.repeat(np.arange(no), ns * nop), nu)
    sidx = np.tile(np.repeat(np.arange(ns), nop), nu * no)
    opidx = np.tile(np.arange(nop), nu * no * ns)
    codes = np.hstack([U[uidx], O[oidx], S[sidx], op_codes[opidx][:, None]])
    permitted = bulk_decisions(policy, codes, encoder)

    uids = [e.id for e in by_kind[USER]]
    oids = [e.id for e in by_kind[OBJECT]]
    sids = [e.id for e in by_kind[SESSION]]
    tuples = []
    for i in range(total):
        q = AccessRequest(uids[uidx[i]], oids[oidx[i]], sids[sidx[i]], ops[opidx[i]])
        tuples.append(AuthorizationTuple(q, PERMIT if permitted[i] else DENY))
    return AccessLog(policy.schema, policy.entities, tuple(tuples))


def _ceil_count(fraction: float, n: int) -> int:
    # Tolerate float error so e.g. 0.1 of 1000 is exactly 100, not 101.
    return min(n, math.ceil(fraction * n - 1e-9)) if n else 0


def sparsify(log: AccessLog, fraction: float, seed: int) -> AccessLog:
    """Stratified sample: the same fraction of permits and of denies.

    Keeps ceil(fraction * |L+|) positive and ceil(fraction * |L-|) negative
    tuples, uniformly without replacement, preserving log order.
    """
    if not 0.0 < fraction <= 1.0:
        raise GenerationError(f"sparsify fraction must be in (0, 1], got {fraction}")
    rng = substream(seed, "sparsify")
    flags = np.array([t.permitted for t in log.tuples], dtype=bool)
    keep: list[np.ndarray] = []
    for mask in (flags, ~flags):
        idx = np.flatnonzero(mask)
        take = _ceil_count(fraction, len(idx))
        if take:
            keep.append(rng.choice(idx, size=take, replace=False))
    chosen = np.sort(np.concatenate(keep)) if keep else np.array([], dtype=int)
    return log.replace(log.tuples[i] for i in chosen)


def add_noise(log: AccessLog, fraction: float,
              seed: int) -> tuple[AccessLog, tuple[int, ...]]:
    """Flip the decision of ceil(fraction * |L|) uniformly chosen tuples.

    Returns the noisy log and the sorted indices that were flipped.
    """
    if not 0.0 <= fraction <= 1.0:
        raise GenerationError(f"noise fraction must be in [0, 1], got {fraction}")
    n = len(log.tuples)
    nflips = _ceil_count(fraction, n)
    if nflips == 0:
        return log, ()
    rng = substream(seed, "noise")
    flipped = np.sort(rng.choice(n, size=nflips, replace=False))
    flip_set = set(int(i) for i in flipped)
    tuples = [
        AuthorizationTuple(t.request, DENY if t.permitted else PERMIT)
        if i in flip_set else t
        for i, t in enumerate(log.tuples)
    ]
    return log.replace(tuples), tuple(int(i) for i in flipped)
