"""Correctness and conciseness metrics for mined policies.

All rate-based scores follow the relative-rate formulation: precision,
recall, accuracy, and F-score are computed from the four relative rates
(portions of L+ / L-), not from raw quadrant counts.  A conventional
count-based accuracy is also reported for diagnostics, clearly labeled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyLogError, UndefinedMetricError
from .model import (
    AccessLog,
    AttributeFilter,
    FilterTuple,
    Policy,
    RelationCondition,
    Rule,
)
from .preprocess import FeatureEncoder, encode_requests
from .decisions import bulk_decisions


@dataclass(frozen=True)
class WscWeights:
    """Weights for the four structural components: F_U, F_O, F_S, R."""

    w_user: float = 1.0
    w_object: float = 1.0
    w_session: float = 1.0
    w_relation: float = 1.0

    def __post_init__(self):
        if min(self.w_user, self.w_object, self.w_session, self.w_relation) < 0:
            raise ValueError("WSC weights must be non-negative")


@dataclass(frozen=True)
class RelativeRates:
    """Relative confusion rates plus the raw counts they were derived from.

    A rate is None when its side of the log is empty (undefined).
    """

    tp: float | None
    fp: float | None
    tn: float | None
    fn: float | None
    counts: tuple[int, int, int, int]
    n_pos: int
    n_neg: int

    def require_defined(self) -> None:
        if None in (self.tp, self.fp, self.tn, self.fn):
            raise UndefinedMetricError(
                f"rates undefined: |L+|={self.n_pos}, |L-|={self.n_neg}"
            )


def confusion(policy: Policy, log: AccessLog) -> RelativeRates:
    """Relative TP/FP/TN/FN of the policy against the log."""
    evaluator = LogEvaluator(log)
    return evaluator.rates(policy)


def accuracy(rates: RelativeRates) -> float:
    """Relative accuracy: (TP + TN) / (TP + TN + FP + FN), on rates."""
    rates.require_defined()
    return (rates.tp + rates.tn) / (rates.tp + rates.tn + rates.fp + rates.fn)


def precision(rates: RelativeRates) -> float:
    rates.require_defined()
    denom = rates.tp + rates.fp
    return rates.tp / denom if denom > 0 else 0.0


def recall(rates: RelativeRates) -> float:
    rates.require_defined()
    denom = rates.tp + rates.fn
    return rates.tp / denom if denom > 0 else 0.0


def f_score(rates: RelativeRates) -> float:
    """Harmonic mean of relative precision and recall; 0 in degenerate cases."""
    p = precision(rates)
    r = recall(rates)
    return 2 * p * r / (p + r) if (p + r) > 0 else 0.0


def wsc(policy: Policy, weights: WscWeights = WscWeights()) -> float:
    """Weighted structural complexity: weighted tuple counts over all rules.

    Negative tuples count exactly like positive ones.
    """
    total = 0.0
    for rule in policy.rules:
        parts = rule.filter.by_kind(policy.schema)
        total += (weights.w_user * len(parts["user"])
                  + weights.w_object * len(parts["object"])
                  + weights.w_session * len(parts["session"])
                  + weights.w_relation * len(rule.relation))
    return total


def most_complex_policy(log: AccessLog) -> Policy:
    """One fully pinned rule per distinct positive tuple: the WSC ceiling.

    Each rule pins every user/object/session attribute of the tuple's
    entities and carries the tuple's operation; duplicates collapse.
    """
    pos = log.positive
    if not pos:
        raise EmptyLogError("most complex policy needs a non-empty positive log")
    schema = log.schema
    rules = set()
    for t in pos:
        u, o, s = log.resolve(t.request)
        fts = [FilterTuple(a, u.attrs[a]) for a in schema.user_attrs]
        fts += [FilterTuple(a, o.attrs[a]) for a in schema.object_attrs]
        fts += [FilterTuple(a, s.attrs[a]) for a in schema.session_attrs]
        rules.add(Rule(AttributeFilter(frozenset(fts)), RelationCondition(),
                       t.request.op, True))
    return Policy(schema, frozenset(rules), log.entities)


def delta_wsc(policy_wsc: float, wsc_max: float) -> float:
    """Relative complexity reduction: (WSC_max - WSC + 1) / WSC_max.

    Reproduced exactly as defined, so the empty policy lands slightly above
    1 and the most complex policy at 1/WSC_max; no clamping.
    """
    if wsc_max <= 0:
        raise UndefinedMetricError("wsc_max must be positive")
    return (wsc_max - policy_wsc + 1) / wsc_max


def policy_quality(f: float, dwsc: float) -> float:
    """Equal-importance quality: harmonic mean of F-score and delta-WSC."""
    if f <= 0 or dwsc <= 0:
        return 0.0
    return 2 * f * dwsc / (f + dwsc)


def general_quality(f: float, dwsc: float, beta: float) -> float:
    """Effectiveness-style combination with alpha = 1 / (1 + beta^2).

    Larger beta weighs the complexity reduction more; beta = 1 reduces to
    policy_quality.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if f <= 0 or dwsc <= 0:
        return 0.0
    alpha = 1.0 / (1.0 + beta * beta)
    return 1.0 / (alpha / f + (1.0 - alpha) / dwsc)


@dataclass(frozen=True)
class EvaluationReport:
    rates: RelativeRates
    accuracy: float | None
    count_accuracy: float
    precision: float | None
    recall: float | None
    f_score: float | None
    wsc: float
    wsc_max: float | None
    delta_wsc: float | None
    quality: float | None
    weights: WscWeights = field(default_factory=WscWeights)

    def to_dict(self) -> dict:
        c = self.rates.counts
        return {
            "tp_rate": self.rates.tp, "fp_rate": self.rates.fp,
            "tn_rate": self.rates.tn, "fn_rate": self.rates.fn,
            "tp_count": c[0], "fp_count": c[1], "tn_count": c[2], "fn_count": c[3],
            "n_pos": self.rates.n_pos, "n_neg": self.rates.n_neg,
            "accuracy": self.accuracy, "count_accuracy": self.count_accuracy,
            "precision": self.precision, "recall": self.recall,
            "f_score": self.f_score, "wsc": self.wsc, "wsc_max": self.wsc_max,
            "delta_wsc": self.delta_wsc, "quality": self.quality,
        }


class LogEvaluator:
    """Caches the encoded log so many policies can be scored against it cheaply.

    Used heavily by rule pruning, which scores one candidate policy per
    considered rule removal.
    """

    def __init__(self, log: AccessLog, weights: WscWeights = WscWeights()):
        self.log = log
        self.weights = weights
        self.encoder = FeatureEncoder.from_schema(log.schema)
        self.codes = encode_requests(log, encoder=self.encoder)
        self.pos_mask = np.array([t.permitted for t in log.tuples], dtype=bool)
        self.n_pos = int(self.pos_mask.sum())
        self.n_neg = len(log.tuples) - self.n_pos
        self._wsc_max: float | None = None

    @property
    def wsc_max(self) -> float | None:
        if self._wsc_max is None and self.n_pos > 0:
            self._wsc_max = wsc(most_complex_policy(self.log), self.weights)
        return self._wsc_max

    def decisions(self, policy: Policy) -> np.ndarray:
        return bulk_decisions(policy, self.codes, self.encoder)

    def rates(self, policy: Policy) -> RelativeRates:
        permitted = self.decisions(policy)
        tp_n = int((permitted & self.pos_mask).sum())
        fn_n = self.n_pos - tp_n
        fp_n = int((permitted & ~self.pos_mask).sum())
        tn_n = self.n_neg - fp_n
        return RelativeRates(
            tp=tp_n / self.n_pos if self.n_pos else None,
            fn=fn_n / self.n_pos if self.n_pos else None,
            fp=fp_n / self.n_neg if self.n_neg else None,
            tn=tn_n / self.n_neg if self.n_neg else None,
            counts=(tp_n, fp_n, tn_n, fn_n),
            n_pos=self.n_pos,
            n_neg=self.n_neg,
        )

    def f_score(self, policy: Policy) -> float:
        return f_score(self.rates(policy))

    def quality(self, policy: Policy) -> float:
        return policy_quality(self.f_score(policy),
                              delta_wsc(wsc(policy, self.weights), self.wsc_max))

    def report(self, policy: Policy) -> EvaluationReport:
        rates = self.rates(policy)
        c = rates.counts
        n = len(self.log.tuples)
        defined = None not in (rates.tp, rates.fp, rates.tn, rates.fn)
        acc = accuracy(rates) if defined else None
        p = precision(rates) if defined else None
        r = recall(rates) if defined else None
        f = f_score(rates) if defined else None
        w = wsc(policy, self.weights)
        wmax = self.wsc_max
        dw = delta_wsc(w, wmax) if wmax else None
        q = policy_quality(f, dw) if (f is not None and dw is not None) else None
        return EvaluationReport(
            rates=rates, accuracy=acc,
            count_accuracy=(c[0] + c[2]) / n if n else 0.0,
            precision=p, recall=r, f_score=f,
            wsc=w, wsc_max=wmax, delta_wsc=dw, quality=q,
            weights=self.weights,
        )


def evaluate_policy(policy: Policy, log: AccessLog,
                    weights: WscWeights = WscWeights()) -> EvaluationReport:
    """Full scorecard of a policy against a log."""
    return LogEvaluator(log, weights).report(policy)
