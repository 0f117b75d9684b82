"""Similarity matrix construction, assignment solving, document scoring."""

import random

import pytest

from claimeval.alignment import (
    SimilarityMatrix,
    aggregate_alignment,
    brute_force_assignment,
    build_similarity_matrix,
    score_document,
    solve_assignment,
)
from claimeval.errors import AlignmentError
from claimeval.metrics import EditMetric
from claimeval.model import ClaimSet


def square(cells, metric_id="edit"):
    n = len(cells)
    return SimilarityMatrix(
        cells=tuple(tuple(row) for row in cells),
        real_rows=n,
        real_cols=n,
        metric_id=metric_id,
    )


class TestBuildMatrix:
    def test_padding_shape(self):
        c1 = ClaimSet("d1", "m", ("aa", "bb"))
        c2 = ClaimSet("d1", "g", ("aa", "bb", "cc"))
        matrix = build_similarity_matrix(c1, c2, EditMetric())
        assert matrix.n == 3
        assert matrix.cells[2] == (0.0, 0.0, 0.0)  # dummy third row
        assert matrix.real_rows == 2 and matrix.real_cols == 3

    def test_identical_singletons(self):
        c1 = ClaimSet("d1", "m", ("ahoj",))
        c2 = ClaimSet("d1", "g", ("ahoj",))
        matrix = build_similarity_matrix(c1, c2, EditMetric())
        assert matrix.cells == ((1.0,),)

    def test_two_vs_one(self):
        c1 = ClaimSet("d1", "m", ("aa", "bb"))
        c2 = ClaimSet("d1", "g", ("aa",))
        matrix = build_similarity_matrix(c1, c2, EditMetric())
        assert matrix.cells == ((1.0, 0.0), (0.0, 0.0))

    def test_doc_mismatch(self):
        with pytest.raises(AlignmentError):
            build_similarity_matrix(
                ClaimSet("d1", "m", ("a",)), ClaimSet("d2", "g", ("a",)), EditMetric()
            )

    def test_both_empty(self):
        with pytest.raises(AlignmentError):
            build_similarity_matrix(
                ClaimSet("d1", "m", ()), ClaimSet("d1", "g", ()), EditMetric()
            )

    def test_padding_must_be_zero(self):
        with pytest.raises(AlignmentError):
            SimilarityMatrix(
                cells=((1.0, 0.5), (0.0, 0.0)), real_rows=2, real_cols=1,
                metric_id="edit",
            )

    def test_real_cells_must_fit_metric_range(self):
        with pytest.raises(AlignmentError):
            SimilarityMatrix(
                cells=((1.5,),), real_rows=1, real_cols=1, metric_id="edit"
            )
        # the same value is fine under the judge's [0, 4] range
        SimilarityMatrix(cells=((1.5,),), real_rows=1, real_cols=1, metric_id="judge")


class TestSolveAssignment:
    def test_diagonal_optimum(self):
        matrix = square([[0.9, 0.1, 0.4], [0.2, 0.8, 0.3], [0.5, 0.6, 0.7]])
        alignment = solve_assignment(matrix)
        assert alignment.pairs == ((0, 0), (1, 1), (2, 2))
        assert alignment.total == pytest.approx(2.4, abs=1e-12)

    def test_singleton(self):
        alignment = solve_assignment(square([[1.0]]))
        assert alignment.pairs == ((0, 0),)
        assert alignment.total == 1.0

    def test_padded_two_by_two(self):
        matrix = SimilarityMatrix(
            cells=((1.0, 0.0), (0.0, 0.0)), real_rows=2, real_cols=1,
            metric_id="edit",
        )
        alignment = solve_assignment(matrix)
        assert alignment.total == 1.0
        assert (0, 0) in alignment.pairs

    def test_anti_diagonal(self):
        matrix = square([[0.0, 1.0], [1.0, 0.0]])
        alignment = solve_assignment(matrix)
        assert alignment.pairs == ((0, 1), (1, 0))
        assert alignment.total == 2.0

    def test_non_finite_rejected(self):
        with pytest.raises(AlignmentError):
            square([[float("nan")]])

    def test_matches_brute_force_on_random(self):
        rng = random.Random(42)
        for _ in range(300):
            n = rng.randint(1, 6)
            matrix = square(
                [[rng.random() for _ in range(n)] for _ in range(n)]
            )
            assert solve_assignment(matrix).total == brute_force_assignment(matrix).total

    def test_real_pairs_excludes_dummies(self):
        matrix = SimilarityMatrix(
            cells=((0.9, 0.0), (0.0, 0.0)), real_rows=1, real_cols=2,
            metric_id="edit",
        )
        alignment = solve_assignment(matrix)
        assert all(i < 1 for i, _ in alignment.real_pairs)


class TestBruteForce:
    def test_guard(self):
        matrix = square([[0.0] * 10 for _ in range(10)])
        with pytest.raises(AlignmentError):
            brute_force_assignment(matrix)

    def test_lexicographically_smallest_under_ties(self):
        matrix = square([[1.0, 1.0], [1.0, 1.0]])
        assert brute_force_assignment(matrix).pairs == ((0, 0), (1, 1))


class TestScoreDocument:
    def test_perfect_match(self):
        c1 = ClaimSet("d1", "m", ("x", "y"))
        c2 = ClaimSet("d1", "g", ("y", "x"))
        score = score_document(c1, c2, EditMetric())
        assert score.normalized.value == 100.0

    def test_extra_candidate_lowers_mean(self):
        # two matched pairs at 1.0 and 0.75 plus a disjoint extra:
        # (1.0 + 0.75 + 0) / 3
        c1 = ClaimSet("d1", "m", ("abcd", "wxyz", "1234"))
        c2 = ClaimSet("d1", "g", ("abcd", "wxyy"))
        score = score_document(c1, c2, EditMetric())
        assert score.raw_mean == pytest.approx((1.0 + 0.75 + 0.0) / 3, abs=1e-12)

    def test_disjoint_extras_formula(self):
        gold = ("tvrzení jedna", "tvrzení dvě")
        extras = ("0123", "4567", "89")
        c1 = ClaimSet("d1", "m", gold + extras)
        c2 = ClaimSet("d1", "g", gold)
        score = score_document(c1, c2, EditMetric())
        r, k = len(gold), len(extras)
        assert score.normalized.value == pytest.approx(100 * r / (r + k), abs=1e-9)

    def test_permutation_invariance(self):
        rng = random.Random(13)
        claims = ("první výrok", "druhý výrok", "třetí výrok", "čtvrtý")
        gold = ClaimSet("d1", "g", claims)
        for _ in range(10):
            shuffled = list(claims)
            rng.shuffle(shuffled)
            cand = ClaimSet("d1", "m", tuple(shuffled))
            assert score_document(cand, gold, EditMetric()).raw_mean == pytest.approx(
                1.0, abs=1e-12
            )

    def test_pair_details_cover_all_pairs(self):
        c1 = ClaimSet("d1", "m", ("aa",))
        c2 = ClaimSet("d1", "g", ("aa", "bb"))
        score = score_document(c1, c2, EditMetric())
        assert len(score.pair_details) == 2
        dummy = [p for p in score.pair_details if p.candidate_index == 1]
        assert dummy[0].value == 0.0

    def test_verify_mode_passes(self):
        c1 = ClaimSet("d1", "m", ("jedna", "dva", "tři", "čtyři"))
        c2 = ClaimSet("d1", "g", ("dva", "jedna", "pět"))
        score = score_document(c1, c2, EditMetric(), verify=True)
        assert 0.0 <= score.normalized.value <= 100.0


class TestAggregateAlignment:
    def test_modes(self):
        matrix = SimilarityMatrix(
            cells=((0.8, 0.0), (0.0, 0.0)), real_rows=1, real_cols=2,
            metric_id="edit",
        )
        alignment = solve_assignment(matrix)
        assert aggregate_alignment(matrix, alignment, "padded-mean") == pytest.approx(0.4)
        assert aggregate_alignment(matrix, alignment, "real-mean") == pytest.approx(0.8)
        assert aggregate_alignment(matrix, alignment, "total") == pytest.approx(0.8)

    def test_unknown_mode(self):
        matrix = square([[1.0]])
        with pytest.raises(ValueError):
            aggregate_alignment(matrix, solve_assignment(matrix), "median")
