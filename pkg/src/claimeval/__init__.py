"""Document-level claim extraction evaluation toolkit."""

from .aggregation import (
    CountReport,
    EvaluationReport,
    LoaoResult,
    Pooling,
    build_count_report,
    claim_count_diff,
    csad_min,
    csad_total,
    evaluate_dataset,
    human_to_human_count,
    leave_one_annotator_out,
    render_report,
)
from .alignment import (
    Alignment,
    DocumentScore,
    SimilarityMatrix,
    aggregate_alignment,
    brute_force_assignment,
    build_similarity_matrix,
    score_document,
    solve_assignment,
)
from .metrics import (
    EditMetric,
    EmbeddingMetric,
    JudgeDistribution,
    JudgeMetric,
    MetricBackend,
    TokenEmbeddingSet,
    edit_similarity,
    embedding_similarity,
    expected_score,
    judge_pair,
    score_pair,
)
from .model import (
    AnnotatedDocument,
    ClaimSet,
    Document,
    NormalizedScore,
    PairScore,
    ValidationReport,
    denormalize_score,
    normalize_score,
    validate_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDocument",
    "Alignment",
    "ClaimSet",
    "CountReport",
    "Document",
    "DocumentScore",
    "EditMetric",
    "EmbeddingMetric",
    "EvaluationReport",
    "JudgeDistribution",
    "JudgeMetric",
    "LoaoResult",
    "MetricBackend",
    "NormalizedScore",
    "PairScore",
    "Pooling",
    "SimilarityMatrix",
    "TokenEmbeddingSet",
    "ValidationReport",
    "aggregate_alignment",
    "brute_force_assignment",
    "build_count_report",
    "build_similarity_matrix",
    "claim_count_diff",
    "csad_min",
    "csad_total",
    "denormalize_score",
    "edit_similarity",
    "embedding_similarity",
    "evaluate_dataset",
    "expected_score",
    "human_to_human_count",
    "judge_pair",
    "leave_one_annotator_out",
    "normalize_score",
    "render_report",
    "score_document",
    "score_pair",
    "solve_assignment",
    "validate_dataset",
]
