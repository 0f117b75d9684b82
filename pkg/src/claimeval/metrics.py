"""Pairwise claim-similarity backends.

Three interchangeable metrics: normalized edit similarity (lexical
baseline), greedy-matching embedding F1 (semantic), and a logit-based
LLM judge returning the probability-weighted expectation of a discrete
0-4 rating. Backends are stateless and safe for concurrent scoring.
"""

from __future__ import annotations

import math
import re
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from importlib import resources

from .clients import ChatClient, EmbeddingClient, digit_logits, embed_tokens
from .errors import (
    CapabilityError,
    MetricInputError,
    PartialDistributionError,
    PromptTemplateError,
)
from .model import PairScore, metric_range, nfc

_WHITESPACE = re.compile(r"\s+")

JUDGE_PROMPT_VERSION = "1"


def canonical_claim(text: str) -> str:
    """NFC-normalize, trim, and collapse whitespace runs to single spaces."""
    return _WHITESPACE.sub(" ", nfc(text)).strip()


def levenshtein(a: str, b: str) -> int:
    """Edit distance over Unicode scalar values, two-row DP."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            )
        previous = current
    return previous[len(b)]


def edit_similarity(a: str, b: str) -> float:
    """Normalized character-level edit similarity in [0, 1].

    1 - levenshtein(a, b) / max(|a|, |b|) on canonicalized text;
    case-sensitive; two empty strings count as identical.
    """
    a = canonical_claim(a)
    b = canonical_claim(b)
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


@dataclass(frozen=True, slots=True)
class TokenEmbeddingSet:
    """Unit-norm vectors for one claim, one per token (or one per sentence)."""

    claim_text: str
    vectors: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if self.claim_text.strip() and not self.vectors:
            raise MetricInputError(
                f"no vectors for nonempty claim {self.claim_text!r}"
            )
        dims = {len(v) for v in self.vectors}
        if len(dims) > 1:
            raise MetricInputError(f"mixed vector dimensions {sorted(dims)}")
        for v in self.vectors:
            norm = math.sqrt(math.fsum(x * x for x in v))
            if abs(norm - 1.0) > 1e-6:
                raise MetricInputError(f"vector norm {norm} not unit within 1e-6")

    @property
    def dimension(self) -> int:
        return len(self.vectors[0]) if self.vectors else 0


def _clamped_cosine(u: tuple[float, ...], v: tuple[float, ...]) -> float:
    # Unit vectors: cosine is the dot product. Negative cosines floor at 0 so
    # the metric's minimum matches the zero padding of the alignment matrix.
    return min(1.0, max(0.0, math.fsum(x * y for x, y in zip(u, v))))


def embedding_similarity(a: TokenEmbeddingSet, b: TokenEmbeddingSet) -> float:
    """Greedy-matching F1 over token embeddings, in [0, 1].

    Precision is the mean over a's tokens of the best clamped cosine
    against b's tokens; recall is symmetric; returns 2PR/(P+R).
    """
    if not a.vectors or not b.vectors:
        raise MetricInputError("empty token list; claims are nonempty, backend fault")
    if a.dimension != b.dimension:
        raise MetricInputError(
            f"vector dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    precision = math.fsum(
        max(_clamped_cosine(u, v) for v in b.vectors) for u in a.vectors
    ) / len(a.vectors)
    recall = math.fsum(
        max(_clamped_cosine(v, u) for u in a.vectors) for v in b.vectors
    ) / len(b.vectors)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def softmax5(logits: tuple[float, ...] | list[float]) -> tuple[float, ...]:
    """Softmax restricted to five values; shift-invariant by construction."""
    if len(logits) != 5:
        raise ValueError(f"expected five logits, got {len(logits)}")
    peak = max(logits)
    weights = [math.exp(x - peak) for x in logits]
    total = math.fsum(weights)
    return tuple(w / total for w in weights)


def expected_score(probabilities: tuple[float, ...] | list[float]) -> float:
    """Probability-weighted expectation over the discrete scores 0..4."""
    if len(probabilities) != 5:
        raise ValueError(f"expected five probabilities, got {len(probabilities)}")
    if any(p < 0.0 for p in probabilities):
        raise ValueError("probabilities must be nonnegative")
    total = math.fsum(probabilities)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {total}, not 1 within 1e-6")
    return math.fsum(p * i for i, p in enumerate(probabilities))


@dataclass(frozen=True, slots=True)
class JudgeDistribution:
    """Probability mass over the judge's discrete scores {0..4}."""

    probabilities: tuple[float, float, float, float, float]
    expectation: float
    approximate: bool = False

    def __post_init__(self) -> None:
        if len(self.probabilities) != 5:
            raise ValueError("judge distribution needs exactly five probabilities")
        if any(p < 0.0 for p in self.probabilities):
            raise ValueError("probabilities must be nonnegative")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1 within 1e-9")
        recomputed = math.fsum(p * i for i, p in enumerate(self.probabilities))
        if abs(recomputed - self.expectation) > 1e-9:
            raise ValueError(
                f"expectation {self.expectation} inconsistent with probabilities "
                f"(recomputed {recomputed})"
            )

    @classmethod
    def from_logits(
        cls, logits: tuple[float, ...] | list[float], *, approximate: bool = False
    ) -> "JudgeDistribution":
        probabilities = softmax5(tuple(logits))
        return cls(probabilities, expected_score(probabilities), approximate)

    @classmethod
    def from_counts(cls, counts: list[int]) -> "JudgeDistribution":
        total = sum(counts)
        if total == 0:
            raise ValueError("cannot build a distribution from zero samples")
        probabilities = tuple(c / total for c in counts)
        return cls(probabilities, expected_score(probabilities), approximate=True)


def load_judge_template(language: str = "cs") -> str:
    """Packaged judge prompt for the given language (cs default, en fallback)."""
    name = f"judge_{language}.txt"
    return resources.files("claimeval.prompts").joinpath(name).read_text("utf-8")


def render_judge_prompt(template: str, candidate: str, reference: str) -> str:
    for placeholder in ("{candidate}", "{reference}"):
        if placeholder not in template:
            raise PromptTemplateError(
                f"judge template is missing the {placeholder} placeholder"
            )
    return template.replace("{candidate}", candidate).replace("{reference}", reference)


def judge_pair(
    candidate: str,
    reference: str,
    client: ChatClient,
    *,
    template: str | None = None,
) -> JudgeDistribution:
    """Score one claim pair with the logit-based judge.

    Sends the judge prompt (candidate first), reads the log-probabilities of
    the five digit tokens at the first generated position, and softmaxes
    over exactly those five.
    """
    if template is None:
        template = load_judge_template()
    prompt = render_judge_prompt(template, candidate, reference)
    _text, table = client.complete_with_logprobs(prompt)
    found = digit_logits(table)
    if len(found) < 5:
        raise PartialDistributionError(found)
    return JudgeDistribution.from_logits(tuple(found[d] for d in range(5)))


class MetricBackend(ABC):
    """A pairwise claim-similarity metric with a declared score range."""

    metric_id: str
    range_max: float
    requires_network: bool

    @abstractmethod
    def score(self, candidate: str, reference: str) -> float:
        """Raw similarity of candidate vs reference, in [0, range_max]."""


class EditMetric(MetricBackend):
    metric_id = "edit"
    range_max = metric_range("edit")
    requires_network = False

    def score(self, candidate: str, reference: str) -> float:
        return edit_similarity(candidate, reference)


class EmbeddingMetric(MetricBackend):
    """Greedy-matching F1 over embeddings provided by a client backend."""

    metric_id = "embed"
    range_max = metric_range("embed")
    requires_network = True

    def __init__(self, client: EmbeddingClient):
        self.client = client
        self._cache: dict[str, TokenEmbeddingSet] = {}
        self._lock = threading.Lock()

    def _embed(self, text: str) -> TokenEmbeddingSet:
        with self._lock:
            cached = self._cache.get(text)
        if cached is not None:
            return cached
        embedded = embed_tokens(text, self.client)
        with self._lock:
            self._cache.setdefault(text, embedded)
        return embedded

    def score(self, candidate: str, reference: str) -> float:
        return embedding_similarity(self._embed(candidate), self._embed(reference))


class JudgeMetric(MetricBackend):
    """LLM-as-judge expectation metric in [0, 4].

    Orientation is asymmetric by design: the candidate claim always fills
    the first slot of the prompt. When the endpoint cannot return logprobs
    and ``sampling_fallback`` is set, the distribution is estimated from 32
    single-digit samples at temperature 1 and marked approximate.
    """

    metric_id = "judge"
    range_max = metric_range("judge")
    requires_network = True

    FALLBACK_SAMPLES = 32

    def __init__(
        self,
        client: ChatClient,
        *,
        template: str | None = None,
        sampling_fallback: bool = False,
    ):
        self.client = client
        self.template = template if template is not None else load_judge_template()
        render_judge_prompt(self.template, "", "")  # fail fast on bad templates
        self.sampling_fallback = sampling_fallback
        self.used_sampling_fallback = False

    def judge(self, candidate: str, reference: str) -> JudgeDistribution:
        try:
            return judge_pair(candidate, reference, self.client, template=self.template)
        except CapabilityError:
            if not self.sampling_fallback:
                raise
            self.used_sampling_fallback = True
            return self._sample_distribution(candidate, reference)

    def _sample_distribution(self, candidate: str, reference: str) -> JudgeDistribution:
        prompt = render_judge_prompt(self.template, candidate, reference)
        counts = [0] * 5
        for i in range(self.FALLBACK_SAMPLES):
            text = self.client.complete(prompt, temperature=1.0, seed=i).strip()
            if text[:1] in "01234":
                counts[int(text[0])] += 1
        if sum(counts) == 0:
            raise CapabilityError(
                "sampling fallback produced no parseable digit answers"
            )
        return JudgeDistribution.from_counts(counts)

    def score(self, candidate: str, reference: str) -> float:
        return self.judge(candidate, reference).expectation


def score_pair(
    metric: MetricBackend,
    candidate: str,
    reference: str,
    *,
    candidate_index: int = 0,
    reference_index: int = 0,
) -> PairScore:
    """Score one pair in the fixed candidate-first orientation."""
    if not candidate.strip() or not reference.strip():
        raise MetricInputError("empty claims are invalid; reject them upstream")
    value = metric.score(candidate, reference)
    return PairScore(
        candidate_index=candidate_index,
        reference_index=reference_index,
        value=value,
        metric_id=metric.metric_id,
    )
