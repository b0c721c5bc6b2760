"""Encoding, deduplication, imputation, and discretization."""

import pytest

from abacmine.errors import BinningError, EncodingError
from abacmine.model import (
    DENY,
    PERMIT,
    UNK,
    AccessLog,
    AccessRequest,
    AttributeSchema,
    AuthorizationTuple,
    Entity,
)
from abacmine.preprocess import (
    Bin,
    Discretizer,
    FeatureEncoder,
    discretize,
    encode_log,
    impute_missing,
)


class TestEncoder:
    def test_feature_order_is_canonical(self, campus_schema):
        enc = FeatureEncoder.from_schema(campus_schema)
        assert enc.feature_names == ("dept", "position", "type", "dept_o",
                                     "label", "location", "op")
        assert enc.op_index == 6

    def test_same_range_pairs(self, campus_schema):
        enc = FeatureEncoder.from_schema(campus_schema)
        assert enc.same_range_pairs() == ((0, 3),)   # dept / dept_o

    def test_codes_round_trip(self, campus_schema):
        enc = FeatureEncoder.from_schema(campus_schema)
        for f in range(enc.n_features):
            for code, value in enumerate(enc.categories[f]):
                assert enc.code(f, value) == code
                assert enc.value(f, code) == value


class TestEncodeLog:
    def test_duplicates_merge_with_summed_weight(self, campus_log_factory):
        log = campus_log_factory([
            ("u1", "o1", "s1", "read", PERMIT),
            ("u1", "o1", "s1", "read", PERMIT),
            ("u2", "o2", "s1", "read", PERMIT),
        ])
        recs = encode_log(log, which="positive")
        assert len(recs) == 2
        assert recs.total_weight == 3
        assert sorted(recs.weights.tolist()) == [1, 2]

    def test_positive_selection_counts(self, campus_log_factory):
        log = campus_log_factory([
            ("u1", "o1", "s1", "read", PERMIT),
            ("u2", "o2", "s2", "write", PERMIT),
        ])
        recs = encode_log(log, which="positive")
        assert recs.total_weight == len(log.positive) == 2

    def test_record_width(self, campus_log_factory):
        log = campus_log_factory([("u1", "o1", "s1", "read", PERMIT)])
        recs = encode_log(log, which="all")
        assert recs.codes.shape[1] == 2 + 3 + 1 + 1

    def test_decode_round_trip(self, campus_log_factory, campus_entities):
        log = campus_log_factory([("u1", "o2", "s2", "write", PERMIT)])
        recs = encode_log(log, which="all")
        row = recs.decode_row(0)
        u, o, s = campus_entities["u1"], campus_entities["o2"], campus_entities["s2"]
        assert row == {**u.attrs, **o.attrs, **s.attrs, "op": "write"}

    def test_distinct_entities_same_profile_merge(self, campus_schema):
        ents = {
            "u1": Entity("u1", "user", {"dept": "CS", "position": "grad"}),
            "u2": Entity("u2", "user", {"dept": "CS", "position": "grad"}),
            "o1": Entity("o1", "object", {"type": "article", "dept_o": "CS",
                                          "label": "public"}),
            "s1": Entity("s1", "session", {"location": "campus"}),
        }
        tuples = tuple(
            AuthorizationTuple(AccessRequest(u, "o1", "s1", "read"), PERMIT)
            for u in ("u1", "u2")
        )
        recs = encode_log(AccessLog(campus_schema, ents, tuples))
        assert len(recs) == 1
        assert recs.weights[0] == 2

    def test_records_sorted_canonically(self, campus_log_factory):
        log = campus_log_factory([
            ("u2", "o2", "s2", "write", PERMIT),
            ("u1", "o1", "s1", "read", PERMIT),
            ("u3", "o3", "s1", "read", PERMIT),
        ])
        recs = encode_log(log)
        rows = [tuple(r) for r in recs.codes]
        assert rows == sorted(rows)

    def test_missing_value_rejected_before_imputation(self, campus_schema):
        ents = {
            "u1": Entity("u1", "user", {"dept": "", "position": "grad"}),
            "o1": Entity("o1", "object", {"type": "article", "dept_o": "CS",
                                          "label": "public"}),
            "s1": Entity("s1", "session", {"location": "campus"}),
        }
        log = AccessLog(campus_schema, ents,
                        (AuthorizationTuple(AccessRequest("u1", "o1", "s1",
                                                          "read"), PERMIT),))
        with pytest.raises(EncodingError):
            encode_log(log)


class TestImpute:
    def _log_with_missing(self, campus_schema):
        ents = {
            "u1": Entity("u1", "user", {"dept": "", "position": "grad"}),
            "o1": Entity("o1", "object", {"type": "article", "dept_o": "CS",
                                          "label": "public"}),
            "s1": Entity("s1", "session", {"location": "campus"}),
        }
        return AccessLog(campus_schema, ents,
                         (AuthorizationTuple(AccessRequest("u1", "o1", "s1",
                                                           "read"), PERMIT),))

    def test_missing_becomes_unk(self, campus_schema):
        log = impute_missing(self._log_with_missing(campus_schema))
        assert log.entities["u1"].attrs["dept"] == UNK
        assert UNK in log.schema.ranges["dept"]
        assert UNK not in log.schema.ranges["position"]

    def test_idempotent(self, campus_schema):
        once = impute_missing(self._log_with_missing(campus_schema))
        twice = impute_missing(once)
        assert twice is once

    def test_clean_log_unchanged(self, campus_log_factory):
        log = campus_log_factory([("u1", "o1", "s1", "read", PERMIT)])
        assert impute_missing(log) is log

    def test_imputed_log_encodes(self, campus_schema):
        log = impute_missing(self._log_with_missing(campus_schema))
        recs = encode_log(log)
        assert recs.decode_row(0)["dept"] == UNK


class TestDiscretize:
    def _hours_schema(self):
        return AttributeSchema(
            user_attrs=(), object_attrs=("size",), session_attrs=("hour",),
            operations=frozenset({"read"}),
            ranges={"size": frozenset({"10", "900"}),
                    "hour": frozenset({"7", "10", "18"})},
        )

    def _log(self, schema, hour):
        ents = {
            "u1": Entity("u1", "user", {}),
            "o1": Entity("o1", "object", {"size": "10"}),
            "s1": Entity("s1", "session", {"hour": hour}),
        }
        return AccessLog(schema, ents,
                         (AuthorizationTuple(AccessRequest("u1", "o1", "s1",
                                                           "read"), DENY),))

    def test_working_hours_binning(self):
        schema = self._hours_schema()
        disc = Discretizer({"hour": (Bin("working", 8, 18),
                                     Bin("nonworking", 0, 8))})
        out = discretize(self._log(schema, "10"), disc)
        assert out.entities["s1"].attrs["hour"] == "working"
        assert out.schema.ranges["hour"] == frozenset({"working", "nonworking"})

    def test_half_open_boundary_goes_to_next_bin(self):
        schema = self._hours_schema()
        disc = Discretizer({"hour": (Bin("working", 8, 18),
                                     Bin("nonworking", 18, 24),
                                     Bin("early", 0, 8))})
        out = discretize(self._log(schema, "18"), disc)
        assert out.entities["s1"].attrs["hour"] == "nonworking"

    def test_pass_through_attributes_untouched(self):
        schema = self._hours_schema()
        disc = Discretizer({"hour": (Bin("any", 0, 24),)})
        out = discretize(self._log(schema, "7"), disc)
        assert out.entities["o1"].attrs["size"] == "10"
        assert out.schema.ranges["size"] == schema.ranges["size"]

    def test_out_of_bin_value_raises(self):
        schema = self._hours_schema()
        disc = Discretizer({"hour": (Bin("working", 8, 18),)})
        with pytest.raises(BinningError):
            discretize(self._log(schema, "7"), disc)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(BinningError):
            Discretizer({"hour": (Bin("x", 0, 8), Bin("x", 8, 24))})

    def test_spec_round_trip(self):
        doc = {"hour": {"bins": [{"label": "working", "lo": 8, "hi": 18},
                                 {"label": "nonworking", "lo": 18, "hi": 24}]}}
        disc = Discretizer.from_dict(doc)
        assert disc.apply("hour", "9.5") == "working"


def test_total_weight_equals_selected_tuples(campus_log_factory):
    rows = [("u1", "o1", "s1", "read", PERMIT)] * 5 \
        + [("u2", "o2", "s2", "write", DENY)] * 3
    log = campus_log_factory(rows)
    assert encode_log(log, which="positive").total_weight == 5
    assert encode_log(log, which="negative").total_weight == 3
    assert encode_log(log, which="all").total_weight == 8
