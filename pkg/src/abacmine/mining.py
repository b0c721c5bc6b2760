"""Rule extraction: one candidate ABAC rule per cluster of permitted requests.

A filter tuple is *effective* for a cluster when its value's weighted
frequency inside the cluster deviates from the baseline frequency by more
than a threshold: over-represented values become positive filters
(freq_cluster - freq_baseline > t_pos), under-represented ones become
negative filters (freq_baseline - freq_cluster > t_neg).  Relation
conditions work the same way on the frequency of equality between
same-range attribute pairs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .cluster import KSearchConfig, KSearchResult, kmodes_fit, select_k
from .errors import ConfigError, EmptyLogError, EncodingError
from .metrics import LogEvaluator
from .model import (
    AccessLog,
    AttributeFilter,
    FilterTuple,
    Policy,
    RelationCondition,
    RelationTuple,
    Rule,
)
from .preprocess import RecordSet, encode_log
from .seeds import derive_seed


@dataclass(frozen=True)
class Thresholds:
    """Frequency-difference thresholds for effective attributes/relations."""

    t_pos: float = 0.25
    t_neg: float = 0.25
    theta_pos: float = 0.25
    theta_neg: float = 0.25

    def __post_init__(self):
        for name in ("t_pos", "t_neg", "theta_pos", "theta_neg"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")

    @property
    def total(self) -> float:
        return self.t_pos + self.t_neg + self.theta_pos + self.theta_neg


def default_grid() -> tuple[Thresholds, ...]:
    """The default tuning grid: all four thresholds swept together."""
    return tuple(Thresholds(t, t, t, t) for t in (0.15, 0.2, 0.25, 0.3, 0.35))


@dataclass(frozen=True)
class MiningConfig:
    k: int | None = None              # fixed cluster count; None = auto-select
    k_range: tuple[int, int] = (10, 20)
    thresholds: Thresholds = field(default_factory=Thresholds)
    n_restarts: int = 3
    max_iter: int = 100
    seed: int = 0
    baseline: str = "all"             # frequency baseline: "all" (the whole log) or "positive"

    def __post_init__(self):
        if self.baseline not in ("positive", "all"):
            raise ConfigError(f"baseline must be positive/all, got {self.baseline!r}")
        lo, hi = self.k_range
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad k_range {self.k_range}")

    def search_config(self) -> KSearchConfig:
        return KSearchConfig(k_min=self.k_range[0], k_max=self.k_range[1],
                             n_restarts=self.n_restarts, max_iter=self.max_iter,
                             seed=self.seed)


def value_frequencies(records: RecordSet) -> list[np.ndarray]:
    """Weighted relative frequency of every value, one array per feature."""
    if records.total_weight == 0:
        raise EmptyLogError("frequencies are undefined over an empty record set")
    total = float(records.total_weight)
    n_cats = records.encoder.n_categories()
    return [
        np.bincount(records.codes[:, f], weights=records.weights,
                    minlength=int(n_cats[f])) / total
        for f in range(records.n_features)
    ]


def freq(records: RecordSet, attr: str, value: str) -> float:
    """Weighted fraction of records whose `attr` equals `value`."""
    if records.total_weight == 0:
        raise EmptyLogError("frequency is undefined over an empty record set")
    f = records.encoder.feature_index(attr)
    code = records.encoder.code_or_none(f, value)
    if code is None:
        raise EncodingError(f"value {value!r} is outside the range of {attr!r}")
    mask = records.codes[:, f] == code
    return float(records.weights[mask].sum() / records.total_weight)


def equality_frequencies(records: RecordSet,
                         pairs: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Weighted frequency of value equality for each feature pair."""
    if records.total_weight == 0:
        raise EmptyLogError("frequencies are undefined over an empty record set")
    total = float(records.total_weight)
    out = np.empty(len(pairs))
    for i, (a, b) in enumerate(pairs):
        eq = records.codes[:, a] == records.codes[:, b]
        out[i] = records.weights[eq].sum() / total
    return out


def _check_same_encoder(cluster: RecordSet, baseline: RecordSet) -> None:
    if cluster.encoder is not baseline.encoder and cluster.encoder != baseline.encoder:
        raise EncodingError("cluster and baseline records use different encoders")


def extract_attribute_filters(cluster: RecordSet, baseline: RecordSet,
                              thresholds: Thresholds) -> AttributeFilter:
    """Effective positive and negative attribute filters of one cluster.

    The two conditions are mutually exclusive for non-negative thresholds,
    so the result can never contain a contradictory pair.
    """
    _check_same_encoder(cluster, baseline)
    fc = value_frequencies(cluster)
    fb = value_frequencies(baseline)
    enc = cluster.encoder
    tuples = set()
    for f in range(enc.n_attr_features):
        name = enc.feature_names[f]
        diff = fc[f] - fb[f]
        for code in np.flatnonzero(diff > thresholds.t_pos):
            tuples.add(FilterTuple(name, enc.value(f, int(code)), True))
        for code in np.flatnonzero(-diff > thresholds.t_neg):
            tuples.add(FilterTuple(name, enc.value(f, int(code)), False))
    return AttributeFilter(frozenset(tuples))


def extract_relations(cluster: RecordSet, baseline: RecordSet,
                      thresholds: Thresholds) -> RelationCondition:
    """Effective positive and negative relation conditions of one cluster.

    Only attribute pairs with identical ranges are candidates.
    """
    _check_same_encoder(cluster, baseline)
    enc = cluster.encoder
    pairs = enc.same_range_pairs()
    if not pairs:
        return RelationCondition()
    eq_c = equality_frequencies(cluster, pairs)
    eq_b = equality_frequencies(baseline, pairs)
    tuples = set()
    for i, (a, b) in enumerate(pairs):
        left, right = enc.feature_names[a], enc.feature_names[b]
        diff = eq_c[i] - eq_b[i]
        if diff > thresholds.theta_pos:
            tuples.add(RelationTuple(left, right, True))
        elif -diff > thresholds.theta_neg:
            tuples.add(RelationTuple(left, right, False))
    return RelationCondition(frozenset(tuples))


def _cluster_op(cluster: RecordSet, baseline: RecordSet,
                thresholds: Thresholds) -> tuple[str, bool]:
    """The rule operation for a cluster.

    The operation is clustered like any other feature, so the effective-value
    test applies to it first; with no effective value the cluster's weighted
    majority operation is used.
    """
    enc = cluster.encoder
    f = enc.op_index
    fc = value_frequencies(cluster)[f]
    fb = value_frequencies(baseline)[f]
    diff = fc - fb
    if (diff > thresholds.t_pos).any():
        return enc.value(f, int(np.argmax(diff))), True
    if (-diff > thresholds.t_neg).any():
        return enc.value(f, int(np.argmax(-diff))), False
    return enc.value(f, int(np.argmax(fc))), True


def rule_from_cluster(cluster: RecordSet, baseline: RecordSet,
                      thresholds: Thresholds) -> Rule:
    """Build the candidate rule of one cluster."""
    if len(cluster) == 0:
        raise EmptyLogError("cannot extract a rule from an empty cluster")
    filt = extract_attribute_filters(cluster, baseline, thresholds)
    rel = extract_relations(cluster, baseline, thresholds)
    op, op_positive = _cluster_op(cluster, baseline, thresholds)
    return Rule(filt, rel, op, op_positive)


@dataclass(frozen=True)
class TupleDelta:
    """Why one rule element was extracted: its two frequencies."""

    element: str
    cluster_freq: float
    baseline_freq: float

    @property
    def delta(self) -> float:
        return self.cluster_freq - self.baseline_freq


@dataclass(frozen=True)
class ClusterDiagnostics:
    cluster: int
    distinct_records: int
    weight: int
    rule: Rule
    deltas: tuple[TupleDelta, ...] = ()


def _rule_deltas(cluster: RecordSet, baseline: RecordSet,
                 rule: Rule) -> tuple[TupleDelta, ...]:
    enc = cluster.encoder
    fc = value_frequencies(cluster)
    fb = value_frequencies(baseline)
    out = []
    for t in sorted(rule.filter):
        f = enc.feature_index(t.attr)
        code = enc.code_or_none(f, t.value)
        out.append(TupleDelta(str(t), float(fc[f][code]), float(fb[f][code])))
    if rule.relation:
        pairs = enc.same_range_pairs()
        eq_c = equality_frequencies(cluster, pairs)
        eq_b = equality_frequencies(baseline, pairs)
        by_name = {
            tuple(sorted((enc.feature_names[a], enc.feature_names[b]))): i
            for i, (a, b) in enumerate(pairs)
        }
        for t in sorted(rule.relation):
            i = by_name[(t.left, t.right)]
            out.append(TupleDelta(str(t), float(eq_c[i]), float(eq_b[i])))
    op_f = enc.op_index
    op_code = enc.code(op_f, rule.op)
    bang = "" if rule.op_positive else "!"
    out.append(TupleDelta(f"op:{bang}{rule.op}",
                          float(fc[op_f][op_code]), float(fb[op_f][op_code])))
    return tuple(out)


@dataclass(frozen=True)
class MiningResult:
    policy: Policy
    k: int
    records: RecordSet
    labels: np.ndarray
    diagnostics: tuple[ClusterDiagnostics, ...]
    k_search: KSearchResult | None = None

    def diagnostics_csv(self) -> str:
        lines = ["cluster,distinct_records,weight,element,"
                 "cluster_freq,baseline_freq,delta"]
        for d in self.diagnostics:
            for t in d.deltas:
                lines.append(
                    f'{d.cluster},{d.distinct_records},{d.weight},'
                    f'"{t.element}",{t.cluster_freq:.6f},'
                    f'{t.baseline_freq:.6f},{t.delta:.6f}')
        return "\n".join(lines) + "\n"


def baseline_records(log: AccessLog, config: MiningConfig) -> RecordSet:
    """The record set frequencies are compared against (default: the whole log)."""
    return encode_log(log, which=config.baseline)


def rules_from_model(records: RecordSet, labels: np.ndarray,
                     baseline: RecordSet, thresholds: Thresholds,
                     with_deltas: bool = False
                     ) -> tuple[list[Rule], list[ClusterDiagnostics]]:
    """One rule per non-empty cluster; duplicates are reported but deduplicated."""
    rules: list[Rule] = []
    diags: list[ClusterDiagnostics] = []
    for c in sorted(int(c) for c in np.unique(labels)):
        part = records.subset(labels == c)
        rule = rule_from_cluster(part, baseline, thresholds)
        deltas = _rule_deltas(part, baseline, rule) if with_deltas else ()
        diags.append(ClusterDiagnostics(c, len(part), part.total_weight,
                                        rule, deltas))
        if rule not in rules:
            rules.append(rule)
    return rules, diags


def extract_policy(log: AccessLog, config: MiningConfig = MiningConfig(),
                   k: int | str | None = None,
                   thresholds: Thresholds | None = None) -> MiningResult:
    """Cluster the positive log and extract one rule per cluster.

    k and thresholds, when given, override the config ("auto" forces the
    k search).  The mined policy reuses the log's schema and entities.
    """
    if k is not None:
        config = replace(config, k=None if k == "auto" else int(k))
    if thresholds is not None:
        config = replace(config, thresholds=thresholds)
    records = encode_log(log, which="positive")
    if len(records) == 0:
        raise EmptyLogError("cannot mine a policy from a log with no permits")
    base = records if config.baseline == "positive" else encode_log(log, which="all")

    n = len(records)
    search: KSearchResult | None = None
    if config.k is None:
        lo, hi = config.k_range
        sc = KSearchConfig(k_min=min(lo, n), k_max=min(hi, n),
                           n_restarts=config.n_restarts,
                           max_iter=config.max_iter, seed=config.seed)
        search = select_k(records, sc)
        model = search.model
        k_used = search.k
    else:
        k_used = min(config.k, n)
        model = kmodes_fit(records, k_used, config.search_config())

    rules, diags = rules_from_model(records, model.labels, base,
                                    config.thresholds, with_deltas=True)
    policy = Policy(log.schema, frozenset(rules), log.entities)
    return MiningResult(policy=policy, k=k_used, records=records,
                        labels=model.labels, diagnostics=tuple(diags),
                        k_search=search)


@dataclass(frozen=True)
class TuneResult:
    thresholds: Thresholds
    table: tuple[tuple[Thresholds, float, int], ...]  # (point, mean F, folds used)


def _stratified_folds(log: AccessLog, folds: int, seed: int) -> np.ndarray:
    """Fold id per tuple, stratified on the decision."""
    rng_seed = derive_seed(seed, "tune-folds")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    fold_of = np.empty(len(log.tuples), dtype=np.int64)
    flags = np.array([t.permitted for t in log.tuples], dtype=bool)
    for mask in (flags, ~flags):
        idx = np.flatnonzero(mask)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(len(idx)) % folds
    return fold_of


def tune_thresholds(log: AccessLog, grid: tuple[Thresholds, ...] | None = None,
                    folds: int = 5, config: MiningConfig = MiningConfig(),
                    seed: int = 0) -> TuneResult:
    """Grid-search the four thresholds by stratified cross-validated F-score.

    Clustering does not depend on the thresholds, so each training fold is
    clustered once and every grid point extracts rules from the same
    clusters.  Ties go to the grid point with the smallest threshold sum,
    then to grid order.
    """
    grid = tuple(grid) if grid else default_grid()
    if not grid:
        raise ConfigError("threshold grid is empty")
    if folds < 2:
        raise ConfigError("tuning needs at least 2 folds")

    fold_of = _stratified_folds(log, folds, seed)
    sums = np.zeros(len(grid))
    used = np.zeros(len(grid), dtype=np.int64)
    for f in range(folds):
        train = log.replace(t for i, t in enumerate(log.tuples) if fold_of[i] != f)
        test = log.replace(t for i, t in enumerate(log.tuples) if fold_of[i] == f)
        if not train.positive:
            warnings.warn(f"tuning fold {f}: training split has no permits, skipped")
            continue
        if not (test.positive and test.negative):
            warnings.warn(f"tuning fold {f}: held-out split is one-sided, skipped")
            continue
        records = encode_log(train, which="positive")
        base = records if config.baseline == "positive" else encode_log(train, "all")
        n = len(records)
        if config.k is None:
            lo, hi = config.k_range
            sc = KSearchConfig(k_min=min(lo, n), k_max=min(hi, n),
                               n_restarts=config.n_restarts,
                               max_iter=config.max_iter, seed=config.seed)
            model = select_k(records, sc).model
        else:
            model = kmodes_fit(records, min(config.k, n), config.search_config())
        evaluator = LogEvaluator(test)
        for g, thresholds in enumerate(grid):
            rules, _ = rules_from_model(records, model.labels, base, thresholds)
            policy = Policy(log.schema, frozenset(rules), log.entities)
            sums[g] += evaluator.f_score(policy)
            used[g] += 1

    means = np.where(used > 0, sums / np.maximum(used, 1), -1.0)
    order = sorted(range(len(grid)),
                   key=lambda g: (-means[g], grid[g].total, g))
    best = order[0]
    table = tuple((grid[g], float(means[g]), int(used[g])) for g in range(len(grid)))
    return TuneResult(grid[best], table)
