"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class ClaimEvalError(Exception):
    """Base class for all toolkit errors."""


class MetricRangeError(ClaimEvalError):
    """Raw score outside the declared range of its metric."""

    def __init__(self, metric_id: str, value: float, range_max: float):
        super().__init__(
            f"score {value!r} outside range [0, {range_max}] of metric {metric_id!r}"
        )
        self.metric_id = metric_id
        self.value = value
        self.range_max = range_max


class UnknownMetricError(ClaimEvalError):
    """Metric id not present in the registry."""

    def __init__(self, metric_id: str, known: tuple[str, ...]):
        super().__init__(f"unknown metric {metric_id!r}; registered: {', '.join(known)}")
        self.metric_id = metric_id
        self.known = known


class MetricInputError(ClaimEvalError):
    """Invalid input handed to a similarity backend (empty claim, bad vectors)."""


class PartialDistributionError(ClaimEvalError):
    """Fewer than the five digit tokens were retrievable from the judge."""

    def __init__(self, found: dict[int, float]):
        missing = sorted(set(range(5)) - set(found))
        super().__init__(
            f"judge logprobs missing digit tokens {missing}; found {sorted(found)}"
        )
        self.found = found
        self.missing = tuple(missing)


class AlignmentError(ClaimEvalError):
    """Similarity matrix construction or assignment solving failed."""


class AggregationError(ClaimEvalError):
    """Dataset-level aggregation could not be computed."""


class TransportError(ClaimEvalError):
    """Network request failed after exhausting retries."""

    def __init__(self, message: str, *, retriable: bool = True):
        super().__init__(message)
        self.retriable = retriable


class CapabilityError(ClaimEvalError):
    """Endpoint cannot serve the requested feature (e.g. no logprob support)."""


class CassetteError(ClaimEvalError):
    """Cassette file malformed or written in an unsupported format."""


class CassetteMissError(ClaimEvalError):
    """Replay-mode request whose fingerprint is not in the cassette."""

    def __init__(self, fingerprint: str):
        super().__init__(f"no recorded response for request fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class PromptTemplateError(ClaimEvalError):
    """Prompt template missing a required placeholder."""


class ClaimParseError(ClaimEvalError):
    """Model response could not be parsed as a claim list."""

    def __init__(self, raw_text: str):
        preview = raw_text if len(raw_text) <= 200 else raw_text[:200] + "..."
        super().__init__(f"unparseable claim list in model response: {preview!r}")
        self.raw_text = raw_text


class ExtractionProtocolError(ClaimEvalError):
    """Check-worthiness step returned claims that were not in its input."""

    def __init__(self, alien_claims: list[str]):
        super().__init__(
            "check-worthiness filter returned claims not present in the input: "
            + "; ".join(repr(c) for c in alien_claims)
        )
        self.alien_claims = tuple(alien_claims)


class DatasetFormatError(ClaimEvalError):
    """Malformed dataset file; carries the offending line number when known."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif loc:
            loc += " "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class DatasetValidationError(ClaimEvalError):
    """Loaded dataset failed cross-reference validation."""


class VoteError(ClaimEvalError):
    """Vote record violates an invariant and was rejected."""


class UnknownTaskError(ClaimEvalError):
    """Vote submitted for a task id the service does not know."""


class DuplicateVoteError(ClaimEvalError):
    """Second vote on an already-voted task; the first vote wins."""


class VerificationError(ClaimEvalError):
    """--verify cross-check found a solver/brute-force disagreement."""
