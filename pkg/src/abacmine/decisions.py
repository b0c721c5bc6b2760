"""Vectorized policy evaluation over encoded request matrices.

model.policy_decision answers one request at a time; this module answers a
whole log at once by turning each rule into boolean column masks.  Both
paths implement the same semantics and are cross-checked in the tests.
"""

from __future__ import annotations

import numpy as np

from .errors import EncodingError, SchemaError
from .model import AccessLog, Policy, Rule
from .preprocess import FeatureEncoder, encode_requests


def rule_mask(rule: Rule, codes: np.ndarray, encoder: FeatureEncoder) -> np.ndarray:
    """Boolean vector: which encoded requests satisfy the rule."""
    n = codes.shape[0]
    mask = np.ones(n, dtype=bool)
    for t in rule.filter:
        try:
            f = encoder.feature_index(t.attr)
        except EncodingError as exc:
            raise SchemaError(f"rule references unknown attribute {t.attr!r}") from exc
        code = encoder.code_or_none(f, t.value)
        if code is None:
            # Value never occurs in this schema: a positive tuple can never
            # match, a negative one always holds.
            if t.positive:
                return np.zeros(n, dtype=bool)
            continue
        col_eq = codes[:, f] == code
        mask &= col_eq if t.positive else ~col_eq
        if not mask.any():
            return mask
    for t in rule.relation:
        try:
            fl = encoder.feature_index(t.left)
            fr = encoder.feature_index(t.right)
        except EncodingError as exc:
            raise SchemaError(f"rule references unknown attribute: {exc}") from exc
        eq = codes[:, fl] == codes[:, fr]
        mask &= eq if t.positive else ~eq
        if not mask.any():
            return mask
    op_f = encoder.op_index
    op_code = encoder.code_or_none(op_f, rule.op)
    if op_code is None:
        if rule.op_positive:
            return np.zeros(n, dtype=bool)
        return mask
    op_eq = codes[:, op_f] == op_code
    mask &= op_eq if rule.op_positive else ~op_eq
    return mask


def bulk_decisions(policy: Policy, codes: np.ndarray,
                   encoder: FeatureEncoder) -> np.ndarray:
    """Permit/deny (True/False) for every encoded request row."""
    permitted = np.zeros(codes.shape[0], dtype=bool)
    for rule in policy.rules:
        remaining = ~permitted
        if not remaining.any():
            break
        sub = rule_mask(rule, codes[remaining], encoder)
        permitted[np.flatnonzero(remaining)[sub]] = True
    return permitted


def decide_log(policy: Policy, log: AccessLog) -> np.ndarray:
    """Evaluate the policy on every tuple of the log (True = permit)."""
    encoder = FeatureEncoder.from_schema(log.schema)
    codes = encode_requests(log, encoder=encoder)
    return bulk_decisions(policy, codes, encoder)
