"""Policy improvement: rule pruning and error-driven refinement.

Pruning walks similar rule pairs and drops the rule whose removal helps the
quality metric more.  Refinement mines patterns from the false-negative and
false-positive records: FN patterns either join the policy as missing rules
or strip extra filters from similar (too restrictive) rules; FP patterns
add their filters to similar (too relaxed) rules.  Passes repeat while the
policy quality keeps improving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyLogError
from .metrics import LogEvaluator, WscWeights, wsc
from .mining import MiningConfig, rules_from_model
from .model import (
    AccessLog,
    AttributeFilter,
    AuthorizationTuple,
    FilterTuple,
    Policy,
    RelationCondition,
    Rule,
)
from .preprocess import RecordSet, dedup_records, encode_log, encode_requests
from .cluster import KSearchConfig, select_k, kmodes_fit


@dataclass(frozen=True)
class RefinementConfig:
    max_iterations: int = 10
    similarity_threshold: float = 0.5
    quality_epsilon: float = 0.0
    #: k search range for the small FN/FP sub-extractions; sub_k pins it.
    sub_k_range: tuple[int, int] = (1, 5)
    sub_k: int | None = None
    mining: MiningConfig = field(default_factory=MiningConfig)
    weights: WscWeights = field(default_factory=WscWeights)

    def __post_init__(self):
        if not 0.0 < self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must be in (0, 1]")
        if self.quality_epsilon < 0:
            raise ValueError("quality_epsilon must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def rule_jaccard(r1: Rule, r2: Rule) -> float:
    """Jaccard similarity over the rules' elements.

    Filter tuples, relation tuples, and the (op, polarity) singleton are
    compared as one element universe; since attribute names are unique
    across kinds, the flat filter intersection equals the sum of the
    per-kind (F_U, F_O, F_S) intersections.
    """
    f_inter = len(r1.filter.tuples & r2.filter.tuples)
    f_union = len(r1.filter.tuples | r2.filter.tuples)
    r_inter = len(r1.relation.tuples & r2.relation.tuples)
    r_union = len(r1.relation.tuples | r2.relation.tuples)
    same_op = (r1.op, r1.op_positive) == (r2.op, r2.op_positive)
    inter = f_inter + r_inter + (1 if same_op else 0)
    union = f_union + r_union + (1 if same_op else 2)
    return inter / union


def _canonical(rules) -> list[Rule]:
    return sorted(rules, key=str)


def prune_rules(policy: Policy, log: AccessLog,
                config: RefinementConfig = RefinementConfig()) -> Policy:
    """Drop, among each similar rule pair, the rule whose removal helps more.

    The reference quality is the input policy's and is not refreshed after a
    removal; every accepted removal therefore scores at least the input
    quality, so the result never falls below it.  If neither removal of a
    similar pair reaches the bar, both rules stay.
    """
    if not len(log):
        raise EmptyLogError("pruning needs a non-empty log")
    rules = _canonical(policy.rules)
    if len(rules) < 2:
        return policy
    evaluator = LogEvaluator(log, config.weights)
    cache: dict[frozenset, float] = {}

    def quality(rule_set: frozenset) -> float:
        if rule_set not in cache:
            cache[rule_set] = evaluator.quality(policy.with_rules(rule_set))
        return cache[rule_set]

    current = frozenset(rules)
    q = quality(current)
    for ri in rules:
        for rj in rules:
            if ri == rj or ri not in current or rj not in current:
                continue
            if rule_jaccard(ri, rj) <= config.similarity_threshold:
                continue
            p_i = current - {ri}
            p_j = current - {rj}
            q_i = quality(p_i)
            q_j = quality(p_j)
            if q_i >= q and q_i >= q_j:
                current = p_i
            if q_j >= q and q_j >= q_i:
                current = p_j
    return policy.with_rules(current)


def classify_errors(mined: Policy, log: AccessLog
                    ) -> tuple[list[AuthorizationTuple], list[AuthorizationTuple]]:
    """(FN, FP): permits the policy denies, and denies it permits."""
    evaluator = LogEvaluator(log)
    permitted = evaluator.decisions(mined)
    fns = [t for t, p in zip(log.tuples, permitted) if t.permitted and not p]
    fps = [t for t, p in zip(log.tuples, permitted) if not t.permitted and p]
    return fns, fps


def _error_patterns(error_tuples: list[AuthorizationTuple], log: AccessLog,
                    baseline: RecordSet, config: RefinementConfig) -> list[Rule]:
    """Run the extraction pipeline with the error records as training data.

    Cluster frequencies are still compared against the whole-log baseline,
    matching the main pipeline.
    """
    rows = encode_requests(log, error_tuples, baseline.encoder)
    records = dedup_records(rows, baseline.encoder)
    mc = config.mining
    if config.sub_k is not None:
        k = min(config.sub_k, len(records))
        model = kmodes_fit(records, k, KSearchConfig(
            k_min=1, k_max=max(k, 1), n_restarts=mc.n_restarts,
            max_iter=mc.max_iter, seed=mc.seed))
    else:
        lo, hi = config.sub_k_range
        sc = KSearchConfig(k_min=min(lo, len(records)),
                           k_max=min(hi, len(records)),
                           n_restarts=mc.n_restarts, max_iter=mc.max_iter,
                           seed=mc.seed)
        model = select_k(records, sc).model
    rules, _ = rules_from_model(records, model.labels, baseline, mc.thresholds)
    return _canonical(rules)


def _intersect_into(target: Rule, pattern: Rule) -> Rule:
    """Keep only the filters/relations of `target` that `pattern` shares."""
    return Rule(
        AttributeFilter(target.filter.tuples & pattern.filter.tuples),
        RelationCondition(target.relation.tuples & pattern.relation.tuples),
        target.op, target.op_positive,
    )


def _union_into(target: Rule, pattern: Rule) -> Rule:
    """Add the pattern's missing filters/relations to `target`.

    An incoming tuple that would contradict one of the target's own filter
    tuples (same attribute and value, opposite polarity) is skipped: the
    pattern was mined from records that need not satisfy this rule, and a
    contradictory filter is rejected by construction.
    """
    tuples = set(target.filter.tuples)
    have = {(t.attr, t.value): t.positive for t in tuples}
    for t in pattern.filter.tuples:
        prior = have.get((t.attr, t.value))
        if prior is not None and prior != t.positive:
            continue
        tuples.add(t)
        have[(t.attr, t.value)] = t.positive
    return Rule(
        AttributeFilter(frozenset(tuples)),
        RelationCondition(target.relation.tuples | pattern.relation.tuples),
        target.op, target.op_positive,
    )


def _apply_patterns(working: list[Rule], patterns: list[Rule], merge,
                    add_missing: bool, threshold: float) -> list[Rule]:
    for pattern in patterns:
        similar = [r for r in working if rule_jaccard(pattern, r) > threshold]
        if not similar:
            if add_missing and pattern not in working:
                working.append(pattern)
            continue
        for old in similar:
            new = merge(old, pattern)
            idx = working.index(old)
            if new in working:
                del working[idx]
            else:
                working[idx] = new
    return working


def _refine_pass(policy: Policy, log: AccessLog, baseline: RecordSet,
                 config: RefinementConfig) -> Policy:
    """One FN block followed by one FP block, as a single refinement pass."""
    working = _canonical(policy.rules)

    fns, _ = classify_errors(policy.with_rules(working), log)
    if fns:
        patterns = _error_patterns(fns, log, baseline, config)
        working = _apply_patterns(working, patterns, _intersect_into,
                                  add_missing=True,
                                  threshold=config.similarity_threshold)

    # FPs are recomputed against the FN-refined rule set.
    _, fps = classify_errors(policy.with_rules(working), log)
    if fps:
        patterns = _error_patterns(fps, log, baseline, config)
        working = _apply_patterns(working, patterns, _union_into,
                                  add_missing=False,
                                  threshold=config.similarity_threshold)
    return policy.with_rules(working)


def refine_policy(mined: Policy, log: AccessLog,
                  config: RefinementConfig = RefinementConfig()) -> Policy:
    """Repair restricted/relaxed rules from FN/FP patterns while quality grows.

    A pass is kept only if it improves the quality metric by more than
    quality_epsilon; the first non-improving pass ends the loop.
    """
    if not len(log):
        raise EmptyLogError("refinement needs a non-empty log")
    evaluator = LogEvaluator(log, config.weights)
    base = encode_log(log, which=config.mining.baseline)
    current = mined
    q = evaluator.quality(current)
    for _ in range(config.max_iterations):
        candidate = _refine_pass(current, log, base, config)
        if candidate.rules == current.rules:
            break
        q_new = evaluator.quality(candidate)
        if q_new > q + config.quality_epsilon:
            current, q = candidate, q_new
        else:
            break
    return current


@dataclass(frozen=True)
class TraceRow:
    stage: str
    rules_before: int
    rules_after: int
    f_score: float
    wsc: float
    quality: float


@dataclass(frozen=True)
class EnhanceResult:
    policy: Policy
    trace: tuple[TraceRow, ...]

    def trace_csv(self) -> str:
        lines = ["stage,rules_before,rules_after,f_score,wsc,quality"]
        for r in self.trace:
            lines.append(f"{r.stage},{r.rules_before},{r.rules_after},"
                         f"{r.f_score:.6f},{r.wsc:.1f},{r.quality:.6f}")
        return "\n".join(lines) + "\n"


def enhance(mined: Policy, log: AccessLog,
            config: RefinementConfig = RefinementConfig()) -> EnhanceResult:
    """Alternate pruning and refinement, returning the best policy seen.

    The input policy is one of the candidates, so the output quality never
    falls below the input quality.
    """
    evaluator = LogEvaluator(log, config.weights)
    trace: list[TraceRow] = []

    def record(stage: str, before: Policy, after: Policy) -> None:
        trace.append(TraceRow(
            stage, len(before.rules), len(after.rules),
            evaluator.f_score(after), wsc(after, config.weights),
            evaluator.quality(after)))

    best = current = mined
    best_q = evaluator.quality(mined)
    for _ in range(config.max_iterations):
        start = current
        pruned = prune_rules(current, log, config)
        record("prune", current, pruned)
        refined = refine_policy(pruned, log, config)
        record("refine", pruned, refined)
        current = refined
        q = evaluator.quality(current)
        if q > best_q:
            best, best_q = current, q
        if current.rules == start.rules:
            break
    return EnhanceResult(best, tuple(trace))
