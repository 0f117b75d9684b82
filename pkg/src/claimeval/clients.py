"""Endpoint-agnostic model clients with record/replay support.

The chat client speaks the prevailing commercial-compatible HTTP shape
(``POST {base}/chat/completions``) and can request per-token
log-probabilities; the embedding client targets ``POST {base}/embeddings``.
A cassette stores one ``{"fingerprint": ..., "response": ...}`` record per
line so fixtures stay diff-friendly under version control. Replay mode
performs zero network calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

import httpx

from .errors import (
    CapabilityError,
    CassetteError,
    CassetteMissError,
    MetricInputError,
    TransportError,
)

log = logging.getLogger(__name__)

ENV_BASE_URL = "CLAIMEVAL_BASE_URL"
ENV_API_KEY = "CLAIMEVAL_API_KEY"
ENV_EMBED_URL = "CLAIMEVAL_EMBED_URL"
ENV_EMBED_KEY = "CLAIMEVAL_EMBED_KEY"


def canonical_request(path: str, payload: Mapping[str, Any]) -> str:
    """Canonical serialization of a request, stable across platforms."""
    return json.dumps(
        {"path": path, "payload": payload},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


def request_fingerprint(path: str, payload: Mapping[str, Any]) -> str:
    """SHA-256 fingerprint of the canonicalized request."""
    return hashlib.sha256(canonical_request(path, payload).encode("utf-8")).hexdigest()


class Transport(Protocol):
    """Anything that can answer a JSON POST."""

    def post(self, path: str, payload: dict) -> dict: ...


class HttpTransport:
    """httpx-backed transport with retries, backoff, and an in-flight bound.

    Credentials are sent in the Authorization header and never logged.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        *,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_s: float = 0.5,
        max_in_flight: int = 4,
    ):
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers, timeout=timeout
        )
        self._max_retries = max_retries
        self._backoff_s = backoff_s
        self._gate = threading.BoundedSemaphore(max_in_flight)

    def post(self, path: str, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self._max_retries):
            if attempt:
                time.sleep(self._backoff_s * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    response = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                last = exc
                log.warning("request to %s failed (attempt %d): %s", path, attempt + 1, exc)
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last = TransportError(
                    f"HTTP {response.status_code} from {path}", retriable=True
                )
                log.warning("retriable HTTP %d from %s (attempt %d)",
                            response.status_code, path, attempt + 1)
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"HTTP {response.status_code} from {path}: {response.text[:200]}",
                    retriable=False,
                )
            return response.json()
        raise TransportError(
            f"request to {path} failed after {self._max_retries} attempts: {last}"
        )

    def close(self) -> None:
        self._client.close()

    @classmethod
    def from_env(cls, **kwargs) -> "HttpTransport":
        base = os.environ.get(ENV_BASE_URL)
        if not base:
            raise TransportError(
                f"{ENV_BASE_URL} is not set and no --replay cassette was given",
                retriable=False,
            )
        return cls(base, os.environ.get(ENV_API_KEY), **kwargs)


class Cassette:
    """Keyed map from request fingerprint to stored response, one JSON record per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    fingerprint = record["fingerprint"]
                    response = record["response"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise CassetteError(
                        f"{self.path}:{lineno}: malformed cassette record: {exc}"
                    ) from exc
                self._records[fingerprint] = response

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._records

    def get(self, fingerprint: str) -> dict | None:
        return self._records.get(fingerprint)

    def append(self, fingerprint: str, response: dict) -> None:
        """Persist a record; writes are serialized and append-only."""
        with self._lock:
            if fingerprint in self._records:
                return
            self._records[fingerprint] = response
            line = json.dumps(
                {"fingerprint": fingerprint, "response": response},
                ensure_ascii=False,
                sort_keys=True,
            )
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class ReplayTransport:
    """Serves every request from a cassette; a miss is a deterministic error."""

    def __init__(self, cassette: Cassette | str | Path):
        self.cassette = cassette if isinstance(cassette, Cassette) else Cassette(cassette)

    def post(self, path: str, payload: dict) -> dict:
        fingerprint = request_fingerprint(path, payload)
        response = self.cassette.get(fingerprint)
        if response is None:
            raise CassetteMissError(fingerprint)
        return response


class RecordingTransport:
    """Cache-through recorder: replays hits, forwards misses and appends them."""

    def __init__(self, inner: Transport, cassette: Cassette | str | Path):
        self.inner = inner
        self.cassette = cassette if isinstance(cassette, Cassette) else Cassette(cassette)

    def post(self, path: str, payload: dict) -> dict:
        fingerprint = request_fingerprint(path, payload)
        cached = self.cassette.get(fingerprint)
        if cached is not None:
            return cached
        response = self.inner.post(path, payload)
        self.cassette.append(fingerprint, response)
        return response


class StubChatTransport:
    """Offline chat endpoint answering from a reply function or queue.

    ``replies`` may be a callable mapping the prompt to the response text or
    a sequence consumed in order. Tracks how many requests were served.
    """

    def __init__(self, replies: Callable[[str], str] | Sequence[str]):
        self._fn = replies if callable(replies) else None
        self._queue = None if callable(replies) else list(replies)
        self.calls = 0
        self._lock = threading.Lock()

    def post(self, path: str, payload: dict) -> dict:
        prompt = payload["messages"][-1]["content"]
        with self._lock:
            self.calls += 1
            if self._fn is not None:
                text = self._fn(prompt)
            else:
                if not self._queue:
                    raise TransportError("stub reply queue exhausted", retriable=False)
                text = self._queue.pop(0)
        return {"choices": [{"message": {"role": "assistant", "content": text}}]}


class StubJudgeTransport:
    """Offline judge endpoint emitting digit logprobs.

    ``logits`` is either a fixed five-tuple (scores 0..4) or a callable from
    the prompt to such a tuple. Responses follow the commercial logprob
    shape so the full client parse path is exercised.
    """

    def __init__(
        self,
        logits: Sequence[float] | Callable[[str], Sequence[float]],
        *,
        token_surface: str = "{d}",
    ):
        self._logits = logits
        self._surface = token_surface
        self.calls = 0

    def post(self, path: str, payload: dict) -> dict:
        self.calls += 1
        prompt = payload["messages"][-1]["content"]
        values = self._logits(prompt) if callable(self._logits) else self._logits
        values = list(values)
        if len(values) != 5:
            raise ValueError("judge stub needs exactly five logits")
        top = [
            {"token": self._surface.format(d=d), "logprob": float(values[d])}
            for d in range(5)
        ]
        best = max(range(5), key=lambda d: values[d])
        return {
            "choices": [
                {
                    "message": {"role": "assistant", "content": str(best)},
                    "logprobs": {
                        "content": [
                            {
                                "token": str(best),
                                "logprob": float(values[best]),
                                "top_logprobs": top,
                            }
                        ]
                    },
                }
            ]
        }


def digit_logits(top_logprobs: Mapping[str, float]) -> dict[int, float]:
    """Pick the five digit-token logprobs out of a top-logprob table.

    Tokenizers differ on whether digits carry a leading space; exact
    single-digit tokens are preferred, space-prefixed forms accepted.
    Only digits that were found are returned.
    """
    found: dict[int, float] = {}
    for d in range(5):
        exact = str(d)
        if exact in top_logprobs:
            found[d] = top_logprobs[exact]
        elif " " + exact in top_logprobs:
            found[d] = top_logprobs[" " + exact]
    return found


class ChatClient:
    """Chat-completion client; optionally returns first-position logprobs.

    Responses are requested at temperature 0 with a fixed top-logprob count
    so request fingerprints stay stable for record/replay.
    """

    def __init__(
        self,
        transport: Transport,
        model: str,
        *,
        temperature: float = 0.0,
        max_tokens: int = 1024,
        top_logprobs: int = 20,
    ):
        self.transport = transport
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.top_logprobs = top_logprobs

    def _payload(self, prompt: str, **extra) -> dict:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        payload.update(extra)
        return payload

    def complete(self, prompt: str, *, temperature: float | None = None,
                 seed: int | None = None) -> str:
        """Plain completion; returns the generated text."""
        extra: dict[str, Any] = {}
        if temperature is not None:
            extra["temperature"] = temperature
        if seed is not None:
            extra["seed"] = seed
        data = self.transport.post("/chat/completions", self._payload(prompt, **extra))
        return _first_choice(data)["message"]["content"]

    def complete_with_logprobs(self, prompt: str) -> tuple[str, dict[str, float]]:
        """Completion plus the top-K logprobs at the first generated position."""
        payload = self._payload(
            prompt, logprobs=True, top_logprobs=self.top_logprobs
        )
        data = self.transport.post("/chat/completions", payload)
        choice = _first_choice(data)
        logprobs = choice.get("logprobs")
        content = (logprobs or {}).get("content") or []
        if not content:
            raise CapabilityError(
                "endpoint returned no logprobs; use the sampling fallback "
                "(judge metric with sampling_fallback=True)"
            )
        first = content[0]
        table = {
            entry["token"]: float(entry["logprob"])
            for entry in first.get("top_logprobs", [])
        }
        # The generated token itself may outrank everything in top_logprobs.
        table.setdefault(first["token"], float(first["logprob"]))
        return _first_choice(data)["message"]["content"], table


def _first_choice(data: dict) -> dict:
    try:
        return data["choices"][0]
    except (KeyError, IndexError, TypeError):
        raise TransportError(
            f"malformed chat response: {json.dumps(data)[:200]}", retriable=False
        ) from None


class EmbeddingClient(Protocol):
    """Returns one vector per token, or a single sentence-level vector."""

    def embed(self, text: str) -> list[list[float]]: ...


class HttpEmbeddingClient:
    """Embedding endpoint client producing one sentence-level vector per text.

    The wire protocol offers no portable token-level output, so similarity
    over these embeddings degenerates to plain cosine. Vector dimension must
    not drift between calls within one run.
    """

    def __init__(self, transport: Transport, model: str):
        self.transport = transport
        self.model = model
        self._dim: int | None = None

    def embed(self, text: str) -> list[list[float]]:
        data = self.transport.post(
            "/embeddings", {"model": self.model, "input": [text]}
        )
        try:
            vector = [float(x) for x in data["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(
                f"malformed embedding response: {exc}", retriable=False
            ) from None
        self._check_dim(len(vector))
        return [vector]

    def _check_dim(self, dim: int) -> None:
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise MetricInputError(
                f"embedding dimension drifted from {self._dim} to {dim} within one run"
            )

    @classmethod
    def from_env(cls, model: str, **kwargs) -> "HttpEmbeddingClient":
        base = os.environ.get(ENV_EMBED_URL) or os.environ.get(ENV_BASE_URL)
        if not base:
            raise TransportError(
                f"{ENV_EMBED_URL} is not set", retriable=False
            )
        key = os.environ.get(ENV_EMBED_KEY) or os.environ.get(ENV_API_KEY)
        return cls(HttpTransport(base, key, **kwargs), model)


class StubEmbeddingClient:
    """Deterministic offline embedder: each distinct token gets a basis vector.

    Tokens are assigned basis indices in first-seen order, so a fixed input
    sequence yields identical vectors across runs. Distinct tokens are
    exactly orthogonal; beyond ``dim`` distinct tokens the vocabulary
    overflows and an error is raised.
    """

    def __init__(self, dim: int = 512):
        self.dim = dim
        self._vocab: dict[str, int] = {}
        self._lock = threading.Lock()

    def _index(self, token: str) -> int:
        with self._lock:
            if token not in self._vocab:
                if len(self._vocab) >= self.dim:
                    raise MetricInputError(
                        f"stub embedding vocabulary exceeded {self.dim} tokens"
                    )
                self._vocab[token] = len(self._vocab)
            return self._vocab[token]

    def embed(self, text: str) -> list[list[float]]:
        tokens = text.split()
        vectors = []
        for token in tokens:
            vector = [0.0] * self.dim
            vector[self._index(token)] = 1.0
            vectors.append(vector)
        return vectors


def embed_tokens(text: str, client: EmbeddingClient):
    """Embed a claim into unit-normalized per-token vectors.

    Falls back transparently to whatever granularity the client provides:
    token-level backends return one vector per token, sentence-level
    backends a single vector.
    """
    from .metrics import TokenEmbeddingSet  # late import; metrics imports this module

    if not text.strip():
        raise MetricInputError("cannot embed empty text")
    raw = client.embed(text)
    if not raw:
        raise MetricInputError(f"embedding backend returned no vectors for {text!r}")
    normalized = []
    for vector in raw:
        norm = math.sqrt(math.fsum(x * x for x in vector))
        if norm == 0.0:
            raise MetricInputError("embedding backend returned a zero vector")
        normalized.append(tuple(x / norm for x in vector))
    return TokenEmbeddingSet(claim_text=text, vectors=tuple(normalized))
