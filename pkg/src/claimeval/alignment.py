"""Claim-set alignment: padded similarity matrix, optimal assignment, document score.

The similarity matrix is square with n = max(|C1|, |C2|), initialized to
zeros; only real (candidate, reference) cells are scored. Unmatched claims
therefore pair with zero-valued dummies, penalizing both over- and
under-generation. The assignment solver is a potential-based Hungarian
algorithm; an exhaustive brute-force twin serves as its independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

from .errors import AlignmentError
from .metrics import MetricBackend, score_pair
from .model import ClaimSet, NormalizedScore, PairScore, metric_range, normalize_score

BRUTE_FORCE_LIMIT = 9

AGGREGATIONS = ("padded-mean", "real-mean", "total")


@dataclass(frozen=True, slots=True)
class SimilarityMatrix:
    """Square zero-padded matrix of pairwise claim similarities."""

    cells: tuple[tuple[float, ...], ...]
    real_rows: int
    real_cols: int
    metric_id: str

    def __post_init__(self) -> None:
        n = len(self.cells)
        if any(len(row) != n for row in self.cells):
            raise AlignmentError("similarity matrix must be square")
        if not (0 <= self.real_rows <= n and 0 <= self.real_cols <= n):
            raise AlignmentError("real row/col counts exceed matrix size")
        if max(self.real_rows, self.real_cols) != n and n > 0:
            raise AlignmentError("matrix size must equal max(real_rows, real_cols)")
        limit = metric_range(self.metric_id)
        for i, row in enumerate(self.cells):
            for j, value in enumerate(row):
                if not math.isfinite(value):
                    raise AlignmentError(f"non-finite cell ({i}, {j}): {value}")
                if (i >= self.real_rows or j >= self.real_cols) and value != 0.0:
                    raise AlignmentError(
                        f"padding cell ({i}, {j}) must be exactly 0, got {value}"
                    )
                if not (0.0 <= value <= limit):
                    raise AlignmentError(
                        f"cell ({i}, {j}) value {value} outside [0, {limit}] "
                        f"of metric {self.metric_id!r}"
                    )

    @property
    def n(self) -> int:
        return len(self.cells)

    def is_real(self, row: int, col: int) -> bool:
        return row < self.real_rows and col < self.real_cols


@dataclass(frozen=True, slots=True)
class Alignment:
    """A perfect matching of padded row/column indices with its total score."""

    pairs: tuple[tuple[int, int], ...]
    total: float
    real_pairs: tuple[tuple[int, int], ...]


def build_similarity_matrix(
    c1: ClaimSet, c2: ClaimSet, metric: MetricBackend
) -> SimilarityMatrix:
    """Score all real (candidate, reference) combinations into a padded matrix.

    c1 supplies the rows (candidate side), c2 the columns (reference side);
    orientation is candidate-first throughout.
    """
    if c1.doc_id != c2.doc_id:
        raise AlignmentError(
            f"claim sets reference different documents: {c1.doc_id!r} vs {c2.doc_id!r}"
        )
    if not c1.claims and not c2.claims:
        raise AlignmentError(
            f"both claim sets for document {c1.doc_id!r} are empty; score undefined"
        )
    n = max(len(c1.claims), len(c2.claims))
    rows = []
    for i in range(n):
        row = [0.0] * n
        for j in range(n):
            if i < len(c1.claims) and j < len(c2.claims):
                row[j] = score_pair(
                    metric,
                    c1.claims[i],
                    c2.claims[j],
                    candidate_index=i,
                    reference_index=j,
                ).value
        rows.append(tuple(row))
    return SimilarityMatrix(
        cells=tuple(rows),
        real_rows=len(c1.claims),
        real_cols=len(c2.claims),
        metric_id=metric.metric_id,
    )


def _finish(matrix: SimilarityMatrix, row_to_col: Sequence[int]) -> Alignment:
    pairs = tuple((i, row_to_col[i]) for i in range(matrix.n))
    total = math.fsum(matrix.cells[i][j] for i, j in pairs)
    real = tuple(p for p in pairs if matrix.is_real(*p))
    return Alignment(pairs=pairs, total=total, real_pairs=real)


def _hungarian_min(cost: Sequence[Sequence[float]]) -> list[int]:
    """Minimum-cost perfect matching on a square matrix, O(n^3) potentials.

    Returns the column assigned to each row. Deterministic: the column scan
    runs in ascending index order, so ties fall toward lower indices.
    """
    n = len(cost)
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row occupying column j, 1-based; 0 free
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                current = row[j - 1] - u[i0] - v[j]
                if current < minv[j]:
                    minv[j] = current
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        row_to_col[match[j] - 1] = j - 1
    return row_to_col


def solve_assignment(matrix: SimilarityMatrix) -> Alignment:
    """Maximum-total-weight perfect matching via the Hungarian algorithm.

    Maximization is handled by negating the matrix internally. Any optimal
    permutation is acceptable under ties; the solver is deterministic.
    """
    if matrix.n == 0:
        raise AlignmentError("cannot align an empty matrix")
    row_to_col = _hungarian_min([[-x for x in row] for row in matrix.cells])
    return _finish(matrix, row_to_col)


def brute_force_assignment(matrix: SimilarityMatrix) -> Alignment:
    """Exhaustive maximum over all permutations; test oracle and --verify path.

    Scans permutations in lexicographic order with strict improvement, so of
    all optimal pairings the lexicographically smallest is returned.
    """
    n = matrix.n
    if n == 0:
        raise AlignmentError("cannot align an empty matrix")
    if n > BRUTE_FORCE_LIMIT:
        raise AlignmentError(
            f"brute force guards at n <= {BRUTE_FORCE_LIMIT}, got {n}"
        )
    best: tuple[int, ...] | None = None
    best_total = -math.inf
    for perm in permutations(range(n)):
        total = math.fsum(matrix.cells[i][perm[i]] for i in range(n))
        if total > best_total:
            best_total = total
            best = perm
    assert best is not None
    return _finish(matrix, best)


def aggregate_alignment(
    matrix: SimilarityMatrix, alignment: Alignment, mode: str = "padded-mean"
) -> float:
    """Collapse an alignment into one raw number.

    ``padded-mean`` (total / n, the reporting default) is the only mode under
    which zero padding penalizes both missing and redundant claims;
    ``real-mean`` and ``total`` exist for sensitivity analysis.
    """
    if mode == "padded-mean":
        return alignment.total / matrix.n
    if mode == "real-mean":
        if not alignment.real_pairs:
            return 0.0
        return (
            math.fsum(matrix.cells[i][j] for i, j in alignment.real_pairs)
            / len(alignment.real_pairs)
        )
    if mode == "total":
        return alignment.total
    raise ValueError(f"unknown aggregation {mode!r}; expected one of {AGGREGATIONS}")


@dataclass(frozen=True, slots=True)
class DocumentScore:
    """Alignment score of one candidate/reference claim-set pair."""

    doc_id: str
    metric_id: str
    candidate_id: str
    reference_id: str
    raw_mean: float
    normalized: NormalizedScore
    pair_details: tuple[PairScore, ...]


def score_document(
    c1: ClaimSet,
    c2: ClaimSet,
    metric: MetricBackend,
    *,
    verify: bool = False,
) -> DocumentScore:
    """Align two claim sets and average the matched pair scores over n.

    Dummy pairs contribute 0, so over- and under-generation both lower the
    mean. With ``verify`` the solver is cross-checked against brute force
    for matrices small enough to enumerate.
    """
    matrix = build_similarity_matrix(c1, c2, metric)
    alignment = solve_assignment(matrix)
    if verify and matrix.n <= BRUTE_FORCE_LIMIT:
        reference = brute_force_assignment(matrix)
        if reference.total != alignment.total:
            from .errors import VerificationError

            raise VerificationError(
                f"solver total {alignment.total!r} != brute-force total "
                f"{reference.total!r} on document {c1.doc_id!r}"
            )
    raw_mean = alignment.total / matrix.n
    details = tuple(
        PairScore(
            candidate_index=i,
            reference_index=j,
            value=matrix.cells[i][j],
            metric_id=metric.metric_id,
        )
        for i, j in alignment.pairs
    )
    return DocumentScore(
        doc_id=c1.doc_id,
        metric_id=metric.metric_id,
        candidate_id=c1.producer_id,
        reference_id=c2.producer_id,
        raw_mean=raw_mean,
        normalized=normalize_score(raw_mean, metric.metric_id),
        pair_details=details,
    )
