"""Core domain types, score normalization, and dataset validation.

All types are immutable after construction and safe to share across
concurrent workers. Claim text is kept verbatim apart from NFC
normalization applied at ingestion; Czech and Slovak diacritics must
compare consistently across metrics.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import MetricRangeError, UnknownMetricError

LANGUAGES = ("cs", "sk")

# Raw score maxima per registered metric. Every metric must have 0 as its
# attainable minimum so that zero padding in the alignment matrix is a
# true penalty, never a reward.
_METRIC_RANGES: dict[str, float] = {
    "edit": 1.0,
    "embed": 1.0,
    "judge": 4.0,
}


def metric_ids() -> tuple[str, ...]:
    """Registered metric ids, stable order."""
    return tuple(_METRIC_RANGES)


def metric_range(metric_id: str) -> float:
    """Declared raw-score maximum of a metric."""
    try:
        return _METRIC_RANGES[metric_id]
    except KeyError:
        raise UnknownMetricError(metric_id, metric_ids()) from None


def register_metric_range(metric_id: str, range_max: float) -> None:
    """Register a custom metric's range so scores can be normalized.

    Re-registering an existing id with a different range is rejected to keep
    the 0-100 normalization uniform within a process.
    """
    if range_max <= 0:
        raise ValueError(f"range_max must be positive, got {range_max}")
    existing = _METRIC_RANGES.get(metric_id)
    if existing is not None and existing != range_max:
        raise ValueError(
            f"metric {metric_id!r} already registered with range {existing}"
        )
    _METRIC_RANGES[metric_id] = range_max


def nfc(text: str) -> str:
    """NFC-normalize a Unicode string."""
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True, slots=True)
class Document:
    """One source comment to extract claims from."""

    id: str
    language: str
    text: str
    article_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise ValueError("document id must not be empty")
        if self.language not in LANGUAGES:
            raise ValueError(
                f"language must be one of {LANGUAGES}, got {self.language!r}"
            )
        if not self.text.strip():
            raise ValueError(f"document {self.id!r} has empty text")


@dataclass(frozen=True, slots=True)
class ClaimSet:
    """Ordered claims one producer (model or annotator) extracted from one document.

    An empty claims list is legal: a producer may extract nothing. Claim
    strings are stored verbatim; blank claims are a data defect that
    validate_dataset reports rather than raising here, so damaged datasets
    remain inspectable.
    """

    doc_id: str
    producer_id: str
    claims: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.doc_id.strip():
            raise ValueError("claim set doc_id must not be empty")
        if not self.producer_id.strip():
            raise ValueError("claim set producer_id must not be empty")
        object.__setattr__(self, "claims", tuple(self.claims))

    def __len__(self) -> int:
        return len(self.claims)


@dataclass(frozen=True, slots=True)
class PairScore:
    """Raw similarity of one (candidate, reference) claim pair under one metric."""

    candidate_index: int
    reference_index: int
    value: float
    metric_id: str

    def __post_init__(self) -> None:
        limit = metric_range(self.metric_id)
        if not (0.0 <= self.value <= limit):
            raise MetricRangeError(self.metric_id, self.value, limit)


@dataclass(frozen=True, slots=True)
class NormalizedScore:
    """Score on the standardized 0-100 scale."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 100.0):
            raise ValueError(f"normalized score must be in [0, 100], got {self.value}")


def normalize_score(raw: float, metric_id: str) -> NormalizedScore:
    """Map a raw metric score linearly onto the 0-100 scale."""
    limit = metric_range(metric_id)
    if not (0.0 <= raw <= limit):
        raise MetricRangeError(metric_id, raw, limit)
    return NormalizedScore(raw * (100.0 / limit))


def denormalize_score(score: NormalizedScore | float, metric_id: str) -> float:
    """Inverse of normalize_score; recovers the raw metric value."""
    value = score.value if isinstance(score, NormalizedScore) else score
    if not (0.0 <= value <= 100.0):
        raise ValueError(f"normalized score must be in [0, 100], got {value}")
    return value * (metric_range(metric_id) / 100.0)


@dataclass(frozen=True, slots=True)
class AnnotatedDocument:
    """A document together with every claim set produced for it."""

    document: Document
    claim_sets: Mapping[str, ClaimSet]

    def __post_init__(self) -> None:
        if not self.claim_sets:
            raise ValueError(
                f"document {self.document.id!r} has no claim sets attached"
            )
        for producer_id, cs in self.claim_sets.items():
            if cs.doc_id != self.document.id:
                raise ValueError(
                    f"claim set for {cs.doc_id!r} attached to document "
                    f"{self.document.id!r}"
                )
            if cs.producer_id != producer_id:
                raise ValueError(
                    f"claim set keyed {producer_id!r} but produced by "
                    f"{cs.producer_id!r}"
                )
        object.__setattr__(
            self, "claim_sets", MappingProxyType(dict(self.claim_sets))
        )

    @property
    def producers(self) -> tuple[str, ...]:
        return tuple(self.claim_sets)


@dataclass(frozen=True, slots=True)
class ValidationReport:
    """Problems found in a dataset; empty lists mean the dataset is valid."""

    dangling_refs: tuple[tuple[str, str], ...]
    duplicate_producers: tuple[tuple[str, str], ...]
    empty_claims: tuple[tuple[str, str, int], ...]

    @property
    def valid(self) -> bool:
        return not (self.dangling_refs or self.duplicate_producers or self.empty_claims)

    def describe(self) -> str:
        """Human-readable summary, one line per problem."""
        lines: list[str] = []
        for doc_id, producer in self.dangling_refs:
            lines.append(f"dangling reference: claim set {producer!r} -> missing document {doc_id!r}")
        for doc_id, producer in self.duplicate_producers:
            lines.append(f"duplicate claim set: ({doc_id!r}, {producer!r})")
        for doc_id, producer, idx in self.empty_claims:
            lines.append(f"empty claim: ({doc_id!r}, {producer!r}) claim #{idx}")
        return "\n".join(lines) if lines else "dataset valid"


def validate_dataset(
    docs: Iterable[Document], claim_sets: Iterable[ClaimSet]
) -> ValidationReport:
    """Cross-check documents against claim sets.

    Reports dangling doc_id references, duplicate (doc_id, producer_id)
    pairs, and empty claim strings. Never raises; problems are reported.
    Validation is idempotent.
    """
    doc_ids = {d.id for d in docs}
    dangling: list[tuple[str, str]] = []
    duplicates: list[tuple[str, str]] = []
    empties: list[tuple[str, str, int]] = []
    seen: set[tuple[str, str]] = set()
    for cs in claim_sets:
        key = (cs.doc_id, cs.producer_id)
        if key in seen:
            duplicates.append(key)
        seen.add(key)
        if cs.doc_id not in doc_ids:
            dangling.append(key)
        for idx, claim in enumerate(cs.claims):
            if not claim.strip():
                empties.append((cs.doc_id, cs.producer_id, idx))
    return ValidationReport(tuple(dangling), tuple(duplicates), tuple(empties))
