"""Core types, normalization, and dataset validation."""

import random

import pytest

from claimeval.errors import MetricRangeError, UnknownMetricError
from claimeval.model import (
    AnnotatedDocument,
    ClaimSet,
    Document,
    PairScore,
    denormalize_score,
    metric_range,
    normalize_score,
    validate_dataset,
)


class TestNormalizeScore:
    def test_edit_example(self):
        # kitten/sitting oracle: distance 3, max length 7 -> 0.5714...
        assert normalize_score(0.5714, "edit").value == pytest.approx(57.14, abs=1e-9)

    def test_judge_midpoint(self):
        assert normalize_score(2.0, "judge").value == 50.0

    def test_embedding_maximum(self):
        assert normalize_score(1.0, "embed").value == 100.0

    @pytest.mark.parametrize("metric,raw", [("edit", 1.5), ("edit", -0.1), ("judge", 4.2)])
    def test_out_of_range_names_metric(self, metric, raw):
        with pytest.raises(MetricRangeError) as err:
            normalize_score(raw, metric)
        assert metric in str(err.value)

    def test_unknown_metric(self):
        with pytest.raises(UnknownMetricError):
            normalize_score(0.5, "rouge")

    def test_round_trip_recovers_raw(self):
        rng = random.Random(11)
        for metric in ("edit", "embed", "judge"):
            limit = metric_range(metric)
            for _ in range(50):
                raw = rng.random() * limit
                back = denormalize_score(normalize_score(raw, metric), metric)
                assert back == pytest.approx(raw, abs=1e-9)

    def test_monotone(self):
        values = [normalize_score(x / 10, "judge").value for x in range(41)]
        assert values == sorted(values)


class TestDomainTypes:
    def test_document_rejects_empty_text(self):
        with pytest.raises(ValueError):
            Document(id="d1", language="cs", text="   ")

    def test_document_rejects_unknown_language(self):
        with pytest.raises(ValueError):
            Document(id="d1", language="de", text="x")

    def test_claim_set_accepts_empty_claims_list(self):
        cs = ClaimSet(doc_id="d1", producer_id="m", claims=())
        assert len(cs) == 0

    def test_claim_set_freezes_claims(self):
        cs = ClaimSet(doc_id="d1", producer_id="m", claims=["a", "b"])
        assert cs.claims == ("a", "b")

    def test_pair_score_range_enforced(self):
        with pytest.raises(MetricRangeError):
            PairScore(candidate_index=0, reference_index=0, value=1.2, metric_id="edit")
        PairScore(candidate_index=0, reference_index=0, value=3.9, metric_id="judge")

    def test_annotated_document_requires_matching_doc_id(self, doc_factory):
        doc = doc_factory("d1")
        stray = ClaimSet(doc_id="other", producer_id="m", claims=("x",))
        with pytest.raises(ValueError):
            AnnotatedDocument(document=doc, claim_sets={"m": stray})

    def test_annotated_document_requires_a_claim_set(self, doc_factory):
        with pytest.raises(ValueError):
            AnnotatedDocument(document=doc_factory(), claim_sets={})


class TestValidateDataset:
    def _doc(self, doc_id="d1"):
        return Document(id=doc_id, language="cs", text="text")

    def test_matching_set_is_valid(self):
        report = validate_dataset(
            [self._doc()], [ClaimSet("d1", "m", ("claim",))]
        )
        assert report.valid

    def test_dangling_reference(self):
        report = validate_dataset(
            [self._doc()], [ClaimSet("missing", "m", ("claim",))]
        )
        assert not report.valid
        assert len(report.dangling_refs) == 1
        assert report.dangling_refs[0] == ("missing", "m")

    def test_duplicate_producer(self):
        sets = [ClaimSet("d1", "m", ("a",)), ClaimSet("d1", "m", ("b",))]
        report = validate_dataset([self._doc()], sets)
        assert len(report.duplicate_producers) == 1

    def test_empty_claim_reported(self):
        report = validate_dataset(
            [self._doc()], [ClaimSet("d1", "m", ("ok", "  "))]
        )
        assert report.empty_claims == (("d1", "m", 1),)

    def test_idempotent(self):
        docs = [self._doc()]
        sets = [ClaimSet("d1", "m", ("a",)), ClaimSet("d2", "m", ("b",))]
        assert validate_dataset(docs, sets) == validate_dataset(docs, sets)
