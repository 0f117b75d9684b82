"""Dataset file formats, loaders and writers, and the preference vote log.

All files are line-delimited JSON records in UTF-8:
documents ``{"id","lang","text"}`` (optional ``"article_ref"``), claims
``{"doc_id","producer_id","claims":[...]}``, votes ``{"session_id",
"doc_id","left","right","choice","annotator_id","ts"}``. Text fields are
NFC-normalized on load; every load error carries its line number.
"""

from __future__ import annotations

import datetime as dt
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import DatasetFormatError, DatasetValidationError, VoteError
from .model import (
    AnnotatedDocument,
    ClaimSet,
    Document,
    ValidationReport,
    nfc,
    validate_dataset,
)

VOTE_CHOICES = ("left", "right", "both")

DOCUMENTS_FILENAME = "documents.jsonl"
CLAIMS_FILENAME = "claims.jsonl"


def _iter_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) pairs; decode and parse errors carry both
    the line number and, for bad bytes, the offset within the line."""
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError("file does not exist", path=str(path))
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped:
                continue
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DatasetFormatError(
                    f"invalid UTF-8 at byte offset {exc.start}: {exc.reason}",
                    path=str(path), line=lineno,
                ) from exc
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(
                    f"invalid JSON: {exc.msg} (column {exc.colno})",
                    path=str(path), line=lineno,
                ) from exc
            if not isinstance(record, dict):
                raise DatasetFormatError(
                    "record must be a JSON object", path=str(path), line=lineno
                )
            yield lineno, record


def _remap(record: dict, field_map: Mapping[str, str] | None) -> dict:
    if not field_map:
        return record
    remapped = dict(record)
    for ours, theirs in field_map.items():
        if theirs in remapped and ours not in record:
            remapped[ours] = remapped.pop(theirs)
    return remapped


def load_field_map(path: str | Path) -> dict[str, str]:
    """User-editable JSON mapping of our field names to external ones."""
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in mapping.items()
    ):
        raise DatasetFormatError("field map must be a flat string-to-string object",
                                 path=str(path))
    return mapping


def load_documents(
    path: str | Path, field_map: Mapping[str, str] | None = None
) -> list[Document]:
    """Load documents from a JSON-lines file; duplicate ids are an error."""
    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, record in _iter_records(path):
        record = _remap(record, field_map)
        try:
            doc = Document(
                id=str(record["id"]),
                language=str(record["lang"]),
                text=nfc(str(record["text"])),
                article_ref=(
                    str(record["article_ref"]) if record.get("article_ref") else None
                ),
            )
        except KeyError as exc:
            raise DatasetFormatError(
                f"missing field {exc.args[0]!r}", path=str(path), line=lineno
            ) from exc
        except ValueError as exc:
            raise DatasetFormatError(str(exc), path=str(path), line=lineno) from exc
        if doc.id in seen:
            raise DatasetFormatError(
                f"duplicate document id {doc.id!r}", path=str(path), line=lineno
            )
        seen.add(doc.id)
        docs.append(doc)
    return docs


def load_claim_sets(
    path: str | Path, field_map: Mapping[str, str] | None = None
) -> list[ClaimSet]:
    """Load claim sets; claims are NFC-normalized and trimmed, and an empty
    claims array is legal."""
    sets: list[ClaimSet] = []
    seen: set[tuple[str, str]] = set()
    for lineno, record in _iter_records(path):
        record = _remap(record, field_map)
        try:
            claims = record["claims"]
            if not isinstance(claims, list):
                raise DatasetFormatError(
                    "'claims' must be an array", path=str(path), line=lineno
                )
            cs = ClaimSet(
                doc_id=str(record["doc_id"]),
                producer_id=str(record["producer_id"]),
                claims=tuple(nfc(str(c)).strip() for c in claims),
            )
        except KeyError as exc:
            raise DatasetFormatError(
                f"missing field {exc.args[0]!r}", path=str(path), line=lineno
            ) from exc
        except ValueError as exc:
            raise DatasetFormatError(str(exc), path=str(path), line=lineno) from exc
        key = (cs.doc_id, cs.producer_id)
        if key in seen:
            raise DatasetFormatError(
                f"duplicate claim set {key!r}", path=str(path), line=lineno
            )
        seen.add(key)
        sets.append(cs)
    return sets


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def write_documents(path: str | Path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            record = {"id": doc.id, "lang": doc.language, "text": doc.text}
            if doc.article_ref:
                record["article_ref"] = doc.article_ref
            fh.write(_dump(record) + "\n")


def write_claim_sets(path: str | Path, sets: Iterable[ClaimSet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cs in sets:
            fh.write(_dump({
                "doc_id": cs.doc_id,
                "producer_id": cs.producer_id,
                "claims": list(cs.claims),
            }) + "\n")


@dataclass(frozen=True, slots=True)
class DatasetBundle:
    """A validated dataset with its provenance."""

    documents: tuple[Document, ...]
    claim_sets: tuple[ClaimSet, ...]
    source: str
    loaded_at: str

    @classmethod
    def load(
        cls,
        docs_path: str | Path,
        claims_path: str | Path,
        *,
        field_map: Mapping[str, str] | None = None,
    ) -> "DatasetBundle":
        docs = load_documents(docs_path, field_map)
        sets = load_claim_sets(claims_path, field_map)
        report = validate_dataset(docs, sets)
        if not report.valid:
            raise DatasetValidationError(report.describe())
        return cls(
            documents=tuple(docs),
            claim_sets=tuple(sets),
            source=f"{docs_path} + {claims_path}",
            loaded_at=dt.datetime.now(dt.timezone.utc).isoformat(),
        )

    def validation_report(self) -> ValidationReport:
        return validate_dataset(self.documents, self.claim_sets)

    def annotated_documents(self) -> list[AnnotatedDocument]:
        """Group claim sets per document, preserving document order.

        Documents with no claim set at all are skipped (nothing to score).
        """
        by_doc: dict[str, dict[str, ClaimSet]] = {}
        for cs in self.claim_sets:
            by_doc.setdefault(cs.doc_id, {})[cs.producer_id] = cs
        return [
            AnnotatedDocument(document=doc, claim_sets=by_doc[doc.id])
            for doc in self.documents
            if doc.id in by_doc
        ]


@dataclass(frozen=True, slots=True)
class DatasetStats:
    """Shape statistics used to sanity-check ingested corpora."""

    samples: int
    mean_claims: Mapping[str, float]
    language_mix: Mapping[str, int]


def dataset_stats(bundle: DatasetBundle) -> DatasetStats:
    """Sample count, mean claims per document per producer, language mix."""
    totals: dict[str, int] = {}
    docs_covered: dict[str, int] = {}
    for cs in bundle.claim_sets:
        totals[cs.producer_id] = totals.get(cs.producer_id, 0) + len(cs.claims)
        docs_covered[cs.producer_id] = docs_covered.get(cs.producer_id, 0) + 1
    mean_claims = {
        producer: totals[producer] / docs_covered[producer] for producer in totals
    }
    mix: dict[str, int] = {}
    for doc in bundle.documents:
        mix[doc.language] = mix.get(doc.language, 0) + 1
    return DatasetStats(
        samples=len(bundle.documents),
        mean_claims=dict(sorted(mean_claims.items())),
        language_mix=dict(sorted(mix.items())),
    )


@dataclass(frozen=True, slots=True)
class VoteRecord:
    """One preference judgment between two blinded claim sets."""

    session_id: str
    doc_id: str
    left_producer: str
    right_producer: str
    choice: str
    annotator_id: str
    ts: str

    def __post_init__(self) -> None:
        if self.left_producer == self.right_producer:
            raise VoteError(
                f"vote compares producer {self.left_producer!r} with itself"
            )
        if self.choice not in VOTE_CHOICES:
            raise VoteError(f"choice must be one of {VOTE_CHOICES}, got {self.choice!r}")
        if not self.doc_id.strip():
            raise VoteError("vote doc_id must not be empty")

    def to_record(self) -> dict:
        return {
            "session_id": self.session_id,
            "doc_id": self.doc_id,
            "left": self.left_producer,
            "right": self.right_producer,
            "choice": self.choice,
            "annotator_id": self.annotator_id,
            "ts": self.ts,
        }

    @classmethod
    def from_record(cls, record: dict) -> "VoteRecord":
        return cls(
            session_id=str(record["session_id"]),
            doc_id=str(record["doc_id"]),
            left_producer=str(record["left"]),
            right_producer=str(record["right"]),
            choice=str(record["choice"]),
            annotator_id=str(record["annotator_id"]),
            ts=str(record["ts"]),
        )


def utc_now_iso() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


class VoteLog:
    """Append-only vote persistence with a single serialized writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, vote: VoteRecord) -> None:
        line = _dump(vote.to_record())
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def load(self) -> list[VoteRecord]:
        if not self.path.exists():
            return []
        return load_votes(self.path)


def store_vote(log: VoteLog, vote: VoteRecord) -> None:
    """Append one validated vote to the log."""
    log.append(vote)


def load_votes(path: str | Path) -> list[VoteRecord]:
    """Load every vote in file order."""
    votes = []
    for lineno, record in _iter_records(path):
        try:
            votes.append(VoteRecord.from_record(record))
        except KeyError as exc:
            raise DatasetFormatError(
                f"missing field {exc.args[0]!r}", path=str(path), line=lineno
            ) from exc
        except VoteError as exc:
            raise DatasetFormatError(str(exc), path=str(path), line=lineno) from exc
    return votes
