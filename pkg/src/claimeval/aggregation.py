"""Dataset-level evaluation: annotator pooling, claim-count statistics,
leave-one-annotator-out analysis, and report rendering."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Sequence

from .alignment import DocumentScore, score_document
from .errors import AggregationError
from .metrics import MetricBackend
from .model import AnnotatedDocument, ClaimSet, NormalizedScore


class Pooling(str, Enum):
    NONE = "none"
    MAX = "max"


@dataclass(frozen=True, slots=True)
class Exclusion:
    """A document left out of an evaluation, with the reason."""

    doc_id: str
    reason: str


@dataclass(frozen=True, slots=True)
class EvaluationReport:
    """Scores of one candidate against reference annotators over a dataset."""

    metric_id: str
    candidate_id: str
    reference_ids: tuple[str, ...]
    pooling: Pooling
    per_document: tuple[DocumentScore, ...]
    dataset_mean: NormalizedScore
    excluded: tuple[Exclusion, ...] = ()
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.per_document:
            raise ValueError("report needs at least one scored document")
        mean = math.fsum(d.normalized.value for d in self.per_document) / len(
            self.per_document
        )
        if abs(mean - self.dataset_mean.value) > 1e-9:
            raise ValueError(
                f"dataset_mean {self.dataset_mean.value} inconsistent with "
                f"per-document mean {mean}"
            )

    @property
    def producer_pair(self) -> tuple[str, tuple[str, ...]]:
        return (self.candidate_id, self.reference_ids)

    @property
    def n_docs(self) -> int:
        return len(self.per_document)

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)


def _score_against_references(
    doc: AnnotatedDocument,
    candidate_id: str,
    reference_ids: Sequence[str],
    metric: MetricBackend,
    pooling: Pooling,
) -> DocumentScore | Exclusion:
    candidate = doc.claim_sets.get(candidate_id)
    if candidate is None:
        return Exclusion(doc.document.id, f"missing claim set for candidate {candidate_id!r}")
    references = [doc.claim_sets[r] for r in reference_ids if r in doc.claim_sets]
    if not references:
        return Exclusion(
            doc.document.id,
            f"no reference claim set among {list(reference_ids)!r}",
        )
    scores: list[DocumentScore] = []
    for reference in references:
        if not candidate.claims and not reference.claims:
            continue  # score undefined for an empty-vs-empty pair
        scores.append(score_document(candidate, reference, metric))
    if not scores:
        return Exclusion(
            doc.document.id, "candidate and reference claim sets are all empty"
        )
    if pooling is Pooling.MAX:
        return max(scores, key=lambda s: s.normalized.value)
    return scores[0]


def evaluate_dataset(
    dataset: Sequence[AnnotatedDocument],
    candidate_id: str,
    reference_ids: Sequence[str],
    metric: MetricBackend,
    pooling: Pooling = Pooling.NONE,
    *,
    jobs: int = 1,
) -> EvaluationReport:
    """Score a candidate producer against reference producers per document.

    With max pooling the higher score across a document's references is kept
    (the two-annotator setting). Documents missing a claim set are excluded
    and counted, not scored zero. Document order is preserved; evaluation
    parallelizes over documents when jobs > 1.
    """
    if not dataset:
        raise AggregationError("cannot evaluate an empty dataset")
    reference_ids = tuple(reference_ids)
    if not reference_ids:
        raise AggregationError("at least one reference producer is required")
    if pooling is Pooling.NONE and len(reference_ids) > 1:
        raise AggregationError(
            "pooling=none is single-reference; pass pooling=max for multiple annotators"
        )

    def work(doc: AnnotatedDocument) -> DocumentScore | Exclusion:
        return _score_against_references(doc, candidate_id, reference_ids, metric, pooling)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, dataset))
    else:
        outcomes = [work(doc) for doc in dataset]

    scored = [o for o in outcomes if isinstance(o, DocumentScore)]
    excluded = tuple(o for o in outcomes if isinstance(o, Exclusion))
    if not scored:
        raise AggregationError(
            "no document could be scored; "
            + "; ".join(f"{e.doc_id}: {e.reason}" for e in excluded)
        )
    mean = math.fsum(s.normalized.value for s in scored) / len(scored)
    notes: tuple[str, ...] = ()
    if getattr(metric, "used_sampling_fallback", False):
        notes = ("judge scored via sampling fallback; distribution is approximate",)
    return EvaluationReport(
        metric_id=metric.metric_id,
        candidate_id=candidate_id,
        reference_ids=reference_ids,
        pooling=pooling,
        per_document=tuple(scored),
        dataset_mean=NormalizedScore(mean),
        excluded=excluded,
        notes=notes,
    )


def claim_count_diff(
    candidates: Sequence[ClaimSet], references: Sequence[ClaimSet]
) -> float:
    """Mean signed difference |candidate| - |reference| over documents."""
    by_doc = {cs.doc_id: cs for cs in references}
    if len(by_doc) != len(references):
        raise AggregationError("duplicate doc_id among reference claim sets")
    if not candidates:
        raise AggregationError("no candidate claim sets given")
    diffs = []
    for cand in candidates:
        ref = by_doc.get(cand.doc_id)
        if ref is None:
            raise AggregationError(f"no reference claim set for document {cand.doc_id!r}")
        diffs.append(len(cand.claims) - len(ref.claims))
    return math.fsum(diffs) / len(diffs)


def csad_min(candidate_count: int, a1_count: int, a2_count: int) -> float:
    """Signed count difference to the closer annotator; ties break toward a1."""
    if abs(candidate_count - a1_count) <= abs(candidate_count - a2_count):
        return float(candidate_count - a1_count)
    return float(candidate_count - a2_count)


def csad_total(candidate_count: int, a1_count: int, a2_count: int) -> float:
    """Signed count difference to the mean annotator claim-set size."""
    return candidate_count - (a1_count + a2_count) / 2.0


def human_to_human_count(
    a1_counts: Sequence[int], a2_counts: Sequence[int]
) -> float:
    """Mean absolute difference between the two annotators' claim-set sizes."""
    if len(a1_counts) != len(a2_counts):
        raise AggregationError(
            f"count lists differ in length: {len(a1_counts)} vs {len(a2_counts)}"
        )
    if not a1_counts:
        raise AggregationError("empty count lists")
    return math.fsum(abs(a - b) for a, b in zip(a1_counts, a2_counts)) / len(a1_counts)


@dataclass(frozen=True, slots=True)
class CountReport:
    """Claim-count statistics; signed values in tables, absolutes alongside.

    Fields are None when the dataset shape does not support them (e.g. no
    csad columns for a single-annotator dataset).
    """

    candidate_id: str
    mean_signed_diff: float | None = None
    mean_abs_diff: float | None = None
    csad_min: float | None = None
    csad_min_abs: float | None = None
    csad_total: float | None = None
    csad_total_abs: float | None = None
    human_to_human: float | None = None

    def __post_init__(self) -> None:
        if self.human_to_human is not None and self.human_to_human < 0:
            raise ValueError("human_to_human must be nonnegative")
        for name in (
            "mean_signed_diff", "mean_abs_diff", "csad_min", "csad_min_abs",
            "csad_total", "csad_total_abs", "human_to_human",
        ):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")


def build_count_report(
    dataset: Sequence[AnnotatedDocument],
    candidate_id: str,
    reference_ids: Sequence[str],
) -> CountReport:
    """Assemble per-dataset count statistics for one candidate.

    One reference id gives the plain signed mean difference; two give the
    csad-min / csad-total pair plus the human-to-human baseline.
    """
    reference_ids = tuple(reference_ids)
    rows = []
    for doc in dataset:
        cand = doc.claim_sets.get(candidate_id)
        refs = [doc.claim_sets.get(r) for r in reference_ids]
        if cand is None or any(r is None for r in refs):
            continue
        rows.append((len(cand.claims), [len(r.claims) for r in refs]))
    if not rows:
        raise AggregationError(
            f"no document carries claim sets for {candidate_id!r} and {list(reference_ids)!r}"
        )
    if len(reference_ids) == 1:
        diffs = [c - refs[0] for c, refs in rows]
        return CountReport(
            candidate_id=candidate_id,
            mean_signed_diff=math.fsum(diffs) / len(diffs),
            mean_abs_diff=math.fsum(abs(d) for d in diffs) / len(diffs),
        )
    if len(reference_ids) == 2:
        mins = [csad_min(c, r[0], r[1]) for c, r in rows]
        totals = [csad_total(c, r[0], r[1]) for c, r in rows]
        return CountReport(
            candidate_id=candidate_id,
            csad_min=math.fsum(mins) / len(mins),
            csad_min_abs=math.fsum(abs(m) for m in mins) / len(mins),
            csad_total=math.fsum(totals) / len(totals),
            csad_total_abs=math.fsum(abs(t) for t in totals) / len(totals),
            human_to_human=human_to_human_count(
                [r[0] for _, r in rows], [r[1] for _, r in rows]
            ),
        )
    raise AggregationError("count statistics support one or two reference producers")


def pair_agreement(
    doc: AnnotatedDocument,
    producer_a: str,
    producer_b: str,
    metric: MetricBackend,
    *,
    orientation: str = "symmetric",
) -> float:
    """Normalized agreement of two producers on one document.

    ``symmetric`` (default) averages both orientations, which matters for
    the asymmetric judge metric; ``fixed`` scores producer_a as candidate.
    """
    a = doc.claim_sets[producer_a]
    b = doc.claim_sets[producer_b]
    forward = score_document(a, b, metric).normalized.value
    if orientation == "fixed":
        return forward
    if orientation == "symmetric":
        backward = score_document(b, a, metric).normalized.value
        return (forward + backward) / 2.0
    raise ValueError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True, slots=True)
class LoaoEntry:
    annotator_id: str
    agreement_without: float
    gain: float


@dataclass(frozen=True, slots=True)
class LoaoResult:
    """Leave-one-annotator-out agreement, ranked by gain from exclusion."""

    baseline: float
    entries: tuple[LoaoEntry, ...]

    @property
    def outlier_candidate(self) -> str:
        return self.entries[0].annotator_id


def _mean_agreement(
    dataset: Sequence[AnnotatedDocument],
    metric: MetricBackend,
    *,
    exclude: str | None,
    orientation: str,
) -> float | None:
    values = []
    for doc in dataset:
        producers = sorted(p for p in doc.claim_sets if p != exclude)
        for a, b in combinations(producers, 2):
            if not doc.claim_sets[a].claims and not doc.claim_sets[b].claims:
                continue
            values.append(pair_agreement(doc, a, b, metric, orientation=orientation))
    if not values:
        return None
    return math.fsum(values) / len(values)


def leave_one_annotator_out(
    dataset: Sequence[AnnotatedDocument],
    metric: MetricBackend,
    *,
    orientation: str = "symmetric",
) -> LoaoResult:
    """Rank annotators by how much excluding them raises mean agreement.

    Agreement is the mean over all (document, annotator-pair) combinations
    of the pairwise document score. The top gainer is the outlier candidate.
    """
    annotators = sorted({p for doc in dataset for p in doc.claim_sets})
    if len(annotators) < 3:
        raise AggregationError(
            f"leave-one-annotator-out needs at least 3 annotators, found {len(annotators)}"
        )
    baseline = _mean_agreement(dataset, metric, exclude=None, orientation=orientation)
    assert baseline is not None  # >= 3 annotators guarantee at least one pair
    entries = []
    for annotator in annotators:
        agreement = _mean_agreement(
            dataset, metric, exclude=annotator, orientation=orientation
        )
        if agreement is None:
            raise AggregationError(
                f"excluding {annotator!r} leaves no annotator pair to compare"
            )
        entries.append(LoaoEntry(annotator, agreement, agreement - baseline))
    entries.sort(key=lambda e: (-e.agreement_without, e.annotator_id))
    return LoaoResult(baseline=baseline, entries=tuple(entries))


def _fmt(value: float | None, signed: bool = False) -> str:
    if value is None:
        return "--"
    return f"{value:+.2f}" if signed else f"{value:.1f}"


def render_report(
    reports: Sequence[EvaluationReport],
    counts: Sequence[CountReport] = (),
) -> "RenderedReport":
    """Deterministic tables: one row per producer, one column per metric.

    Values are rounded to one decimal; missing (producer, metric) cells show
    "--". The machine-readable rows carry full precision plus absolute count
    variants.
    """
    if not reports:
        raise AggregationError("nothing to render")
    metrics = sorted({r.metric_id for r in reports})
    producers = sorted({r.candidate_id for r in reports})
    by_cell = {(r.candidate_id, r.metric_id): r for r in reports}

    header = ["producer"] + metrics
    rows = [header]
    for producer in producers:
        row = [producer]
        for metric_id in metrics:
            report = by_cell.get((producer, metric_id))
            row.append(_fmt(report.dataset_mean.value if report else None))
        rows.append(row)
    lines = [_format_table(rows)]

    if counts:
        count_rows = [[
            "producer", "count-diff", "csad-min", "csad-total", "human-to-human",
        ]]
        for c in sorted(counts, key=lambda c: c.candidate_id):
            count_rows.append([
                c.candidate_id,
                _fmt(c.mean_signed_diff, signed=True),
                _fmt(c.csad_min, signed=True),
                _fmt(c.csad_total, signed=True),
                "--" if c.human_to_human is None else f"{c.human_to_human:.2f}",
            ])
        lines.append(_format_table(count_rows))

    csv_rows = [("producer", "metric", "dataset_mean", "n_docs", "n_excluded")]
    for r in sorted(reports, key=lambda r: (r.candidate_id, r.metric_id)):
        csv_rows.append(
            (r.candidate_id, r.metric_id, repr(r.dataset_mean.value),
             str(r.n_docs), str(r.n_excluded))
        )
    return RenderedReport(text="\n\n".join(lines) + "\n", csv_rows=tuple(csv_rows))


def _format_table(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    out = []
    for idx, row in enumerate(rows):
        out.append(" | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if idx == 0:
            out.append("-+-".join("-" * w for w in widths))
    return "\n".join(out)


@dataclass(frozen=True, slots=True)
class RenderedReport:
    text: str
    csv_rows: tuple[tuple[str, ...], ...]

    def csv_text(self) -> str:
        return "\n".join(",".join(row) for row in self.csv_rows) + "\n"


def count_csv_rows(counts: Sequence[CountReport]) -> tuple[tuple[str, ...], ...]:
    """Machine-readable count statistics, signed and absolute side by side."""
    rows = [(
        "producer", "mean_signed_diff", "mean_abs_diff", "csad_min", "csad_min_abs",
        "csad_total", "csad_total_abs", "human_to_human",
    )]
    for c in sorted(counts, key=lambda c: c.candidate_id):
        rows.append((c.candidate_id,) + tuple(
            "" if v is None else repr(v)
            for v in (
                c.mean_signed_diff, c.mean_abs_diff, c.csad_min, c.csad_min_abs,
                c.csad_total, c.csad_total_abs, c.human_to_human,
            )
        ))
    return tuple(rows)
