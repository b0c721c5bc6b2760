"""abacmine: mine attribute-based access control policies from access logs.

The pipeline: synthesize or load an access log, preprocess it into
categorical records, cluster the permitted requests with k-modes, extract
one candidate rule per cluster from frequency deviations, then iteratively
prune and refine the rule set while the policy quality metric improves.
"""

from .model import (
    DENY,
    PERMIT,
    UNK,
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
    make_rule,
    policy_decision,
    rule_satisfied,
    satisfies_filter,
    satisfies_relation,
)

__version__ = "0.1.0"

__all__ = [
    "DENY", "PERMIT", "UNK",
    "AccessLog", "AccessRequest", "AttributeFilter", "AttributeSchema",
    "AuthorizationTuple", "Entity", "FilterTuple", "Policy",
    "RelationCondition", "RelationTuple", "Rule", "make_rule",
    "policy_decision", "rule_satisfied", "satisfies_filter",
    "satisfies_relation", "__version__",
]
