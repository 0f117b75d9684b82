"""Dataset loaders/writers, stats, and the vote log."""

import json
import unicodedata

import pytest

from claimeval.errors import DatasetFormatError, DatasetValidationError, VoteError
from claimeval.model import ClaimSet, Document
from claimeval.storage import (
    DatasetBundle,
    VoteLog,
    VoteRecord,
    dataset_stats,
    load_claim_sets,
    load_documents,
    load_field_map,
    load_votes,
    store_vote,
    utc_now_iso,
    write_claim_sets,
    write_documents,
)


def write_lines(path, *lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadDocuments:
    def test_two_well_formed_lines(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        write_lines(
            path,
            '{"id": "d1", "lang": "cs", "text": "Praha je hlavní město."}',
            '{"id": "d2", "lang": "sk", "text": "Bratislava je hlavné mesto."}',
        )
        docs = load_documents(path)
        assert [d.id for d in docs] == ["d1", "d2"]
        assert docs[1].language == "sk"

    def test_malformed_line_carries_number(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        write_lines(
            path,
            '{"id": "d1", "lang": "cs", "text": "ok"}',
            "{not json",
        )
        with pytest.raises(DatasetFormatError) as err:
            load_documents(path)
        assert err.value.line == 2

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        write_lines(
            path,
            '{"id": "d1", "lang": "cs", "text": "a"}',
            '{"id": "d1", "lang": "cs", "text": "b"}',
        )
        with pytest.raises(DatasetFormatError) as err:
            load_documents(path)
        assert "duplicate" in str(err.value)

    def test_non_utf8_reports_offset(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_bytes(b'{"id": "d1", "lang": "cs", "text": "ok"}\n\xff\xfe{"x"\n')
        with pytest.raises(DatasetFormatError) as err:
            load_documents(path)
        assert err.value.line == 2
        assert "byte offset 0" in str(err.value)

    def test_nfc_applied(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        decomposed = "chodí"  # i + combining acute
        write_lines(path, json.dumps({"id": "d1", "lang": "cs", "text": decomposed}))
        docs = load_documents(path)
        assert docs[0].text == unicodedata.normalize("NFC", decomposed)
        assert docs[0].text != decomposed

    def test_field_map(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        write_lines(path, '{"comment_id": "d1", "language": "cs", "body": "text"}')
        mapping = tmp_path / "map.json"
        mapping.write_text('{"id": "comment_id", "lang": "language", "text": "body"}')
        docs = load_documents(path, load_field_map(mapping))
        assert docs[0].id == "d1"


class TestLoadClaimSets:
    def test_empty_claims_array_is_legal(self, tmp_path):
        path = tmp_path / "claims.jsonl"
        write_lines(path, '{"doc_id": "d1", "producer_id": "m", "claims": []}')
        sets = load_claim_sets(path)
        assert sets[0].claims == ()

    def test_claims_trimmed_and_normalized(self, tmp_path):
        path = tmp_path / "claims.jsonl"
        write_lines(
            path,
            json.dumps({"doc_id": "d1", "producer_id": "m",
                        "claims": ["  okraje  ", "chodí"]}),
        )
        sets = load_claim_sets(path)
        assert sets[0].claims == ("okraje", "chodí")

    def test_duplicate_pair_rejected(self, tmp_path):
        path = tmp_path / "claims.jsonl"
        write_lines(
            path,
            '{"doc_id": "d1", "producer_id": "m", "claims": ["a"]}',
            '{"doc_id": "d1", "producer_id": "m", "claims": ["b"]}',
        )
        with pytest.raises(DatasetFormatError):
            load_claim_sets(path)

    def test_claims_must_be_array(self, tmp_path):
        path = tmp_path / "claims.jsonl"
        write_lines(path, '{"doc_id": "d1", "producer_id": "m", "claims": "ne"}')
        with pytest.raises(DatasetFormatError) as err:
            load_claim_sets(path)
        assert err.value.line == 1


class TestRoundTrip:
    def test_documents(self, tmp_path):
        docs = [
            Document(id="d1", language="cs", text="Žluťoučký kůň.", article_ref="a1"),
            Document(id="d2", language="sk", text="Mäkčeň a dĺžeň."),
        ]
        path = tmp_path / "docs.jsonl"
        write_documents(path, docs)
        assert load_documents(path) == docs
        # canonical writer is byte-stable
        first = path.read_bytes()
        write_documents(path, load_documents(path))
        assert path.read_bytes() == first

    def test_claim_sets(self, tmp_path):
        sets = [
            ClaimSet("d1", "m", ("tvrzení jedna", "tvrzení dvě")),
            ClaimSet("d2", "m", ()),
        ]
        path = tmp_path / "claims.jsonl"
        write_claim_sets(path, sets)
        assert load_claim_sets(path) == sets


class TestBundle:
    def _write_valid(self, tmp_path):
        write_lines(tmp_path / "docs.jsonl",
                    '{"id": "d1", "lang": "cs", "text": "text"}')
        write_lines(tmp_path / "claims.jsonl",
                    '{"doc_id": "d1", "producer_id": "m", "claims": ["a"]}',
                    '{"doc_id": "d1", "producer_id": "g", "claims": ["a", "b"]}')

    def test_load_validates(self, tmp_path):
        self._write_valid(tmp_path)
        bundle = DatasetBundle.load(tmp_path / "docs.jsonl", tmp_path / "claims.jsonl")
        assert bundle.validation_report().valid
        annotated = bundle.annotated_documents()
        assert annotated[0].producers == ("m", "g")

    def test_load_rejects_dangling(self, tmp_path):
        write_lines(tmp_path / "docs.jsonl",
                    '{"id": "d1", "lang": "cs", "text": "text"}')
        write_lines(tmp_path / "claims.jsonl",
                    '{"doc_id": "jiné", "producer_id": "m", "claims": ["a"]}')
        with pytest.raises(DatasetValidationError):
            DatasetBundle.load(tmp_path / "docs.jsonl", tmp_path / "claims.jsonl")

    def test_stats(self, tmp_path):
        write_lines(tmp_path / "docs.jsonl",
                    '{"id": "d1", "lang": "cs", "text": "t"}',
                    '{"id": "d2", "lang": "sk", "text": "t"}')
        write_lines(tmp_path / "claims.jsonl",
                    '{"doc_id": "d1", "producer_id": "g", "claims": ["a", "b"]}',
                    '{"doc_id": "d2", "producer_id": "g", "claims": ["a", "b", "c"]}')
        bundle = DatasetBundle.load(tmp_path / "docs.jsonl", tmp_path / "claims.jsonl")
        stats = dataset_stats(bundle)
        assert stats.samples == 2
        assert stats.mean_claims["g"] == pytest.approx(2.5)
        assert stats.language_mix == {"cs": 1, "sk": 1}


def vote(**kwargs):
    defaults = dict(
        session_id="s1", doc_id="d1", left_producer="X", right_producer="Y",
        choice="left", annotator_id="s1", ts=utc_now_iso(),
    )
    defaults.update(kwargs)
    return VoteRecord(**defaults)


class TestVotes:
    def test_round_trip(self, tmp_path):
        log = VoteLog(tmp_path / "votes.jsonl")
        record = vote(ts="2025-01-01T00:00:00+00:00")
        store_vote(log, record)
        assert load_votes(log.path) == [record]

    def test_same_producer_rejected(self):
        with pytest.raises(VoteError):
            vote(right_producer="X")

    def test_bad_choice_rejected(self):
        with pytest.raises(VoteError):
            vote(choice="maybe")

    def test_append_across_sessions_preserves_order(self, tmp_path):
        log = VoteLog(tmp_path / "votes.jsonl")
        expected = []
        for i, (session, choice) in enumerate([
            ("s1", "left"), ("s1", "right"), ("s1", "both"),
            ("s2", "left"), ("s2", "both"), ("s2", "right"),
        ]):
            record = vote(session_id=session, annotator_id=session, choice=choice,
                          doc_id=f"d{i}", ts=f"2025-01-01T00:00:0{i}+00:00")
            log.append(record)
            expected.append(record)
        # a second VoteLog over the same file appends, never truncates
        again = VoteLog(tmp_path / "votes.jsonl")
        assert again.load() == expected
