"""Two-step claim extraction: extract atomic, decontextualized claims,
then keep the check-worthy subset.

An informed mode discloses the expected claim count to the model via a
hint injected into both step templates; model output is never truncated
or padded to match it.
"""

from __future__ import annotations

import logging
import re
import time
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .clients import ChatClient
from .errors import ClaimParseError, ExtractionProtocolError, PromptTemplateError
from .metrics import canonical_claim
from .model import Document, nfc

log = logging.getLogger(__name__)

NO_CLAIMS_SENTINEL = "NONE"

_LIST_MARKER = re.compile(r"^\s*(?:\d+[.)]\s+|[-*•]\s+)(.*\S)\s*$")

_COUNT_HINTS = {
    "cs": "\nOčekávaný počet tvrzení hodných ověření: {n}.\n",
    "sk": "\nOčekávaný počet tvrzení hodných ověření: {n}.\n",
    "en": "\nExpected number of check-worthy claims: {n}.\n",
}

# Slovak documents use the Czech prompt assets; the paper's study ran Czech
# prompts over both languages.
_PROMPT_LANG = {"cs": "cs", "sk": "cs", "en": "en"}


def load_prompt(step: str, language: str = "cs") -> str:
    """Packaged extraction prompt: step is 'extract' or 'checkworthy'."""
    lang = _PROMPT_LANG.get(language, "cs")
    name = f"{step}_{lang}.txt"
    return resources.files("claimeval.prompts").joinpath(name).read_text("utf-8")


@dataclass(frozen=True, slots=True)
class ExtractionConfig:
    """Model id, templates, and options for one extraction run."""

    model_id: str
    extract_template: str
    checkworthy_template: str
    informed_count: int | None = None
    language: str = "cs"

    def __post_init__(self) -> None:
        if "{document}" not in self.extract_template:
            raise PromptTemplateError(
                "extraction template is missing the {document} placeholder"
            )
        if "{claims}" not in self.checkworthy_template:
            raise PromptTemplateError(
                "check-worthiness template is missing the {claims} placeholder"
            )
        if self.informed_count is not None and self.informed_count < 0:
            raise ValueError(f"informed_count must be >= 0, got {self.informed_count}")

    @classmethod
    def default(cls, model_id: str, language: str = "cs",
                informed_count: int | None = None) -> "ExtractionConfig":
        return cls(
            model_id=model_id,
            extract_template=load_prompt("extract", language),
            checkworthy_template=load_prompt("checkworthy", language),
            informed_count=informed_count,
            language=language,
        )


@dataclass(frozen=True, slots=True)
class ExtractionTrace:
    """Both pipeline stages for one document, plus wall-clock timing."""

    doc_id: str
    raw_claims: tuple[str, ...]
    checkworthy_claims: tuple[str, ...]
    model_id: str
    duration_s: float
    expected_count: int | None = None

    def __post_init__(self) -> None:
        missing = Counter(self.checkworthy_claims) - Counter(self.raw_claims)
        if missing:
            raise ValueError(
                f"checkworthy claims not a sub-multiset of raw claims: {dict(missing)}"
            )


def parse_claim_list(text: str) -> list[str]:
    """Parse a numbered or bulleted claim list out of a model response.

    The sentinel answer (or an empty response) means zero claims. A
    response with no recognizable list lines is a parse error carrying the
    raw text.
    """
    stripped = text.strip()
    if not stripped or stripped.upper() == NO_CLAIMS_SENTINEL:
        return []
    claims = []
    for line in stripped.splitlines():
        match = _LIST_MARKER.match(line)
        if match:
            claims.append(nfc(match.group(1)).strip())
    if not claims:
        raise ClaimParseError(text)
    return claims


def _hint(cfg: ExtractionConfig, expected_count: int | None) -> str:
    if expected_count is None:
        return ""
    template = _COUNT_HINTS.get(cfg.language, _COUNT_HINTS["cs"])
    return template.replace("{n}", str(expected_count))


def _fill(template: str, **values: str) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def extract_claims(
    doc: Document,
    cfg: ExtractionConfig,
    client: ChatClient,
    *,
    expected_count: int | None = None,
) -> list[str]:
    """Step 1: prompt for every claim in the document, parsed and normalized."""
    count = expected_count if expected_count is not None else cfg.informed_count
    if count is not None and "{count_hint}" not in cfg.extract_template:
        raise PromptTemplateError(
            "informed extraction requires a {count_hint} placeholder in the "
            "extraction template"
        )
    prompt = _fill(
        cfg.extract_template,
        document=doc.text,
        count_hint=_hint(cfg, count),
    )
    return parse_claim_list(client.complete(prompt))


def filter_checkworthy(
    claims: list[str],
    doc: Document,
    cfg: ExtractionConfig,
    client: ChatClient,
    *,
    expected_count: int | None = None,
) -> list[str]:
    """Step 2: keep the claims the model marks check-worthy, in input order.

    The model must answer with verbatim copies of input claims; anything
    else is a protocol error listing the alien claims. Empty input
    short-circuits without a network call.
    """
    if not claims:
        return []
    count = expected_count if expected_count is not None else cfg.informed_count
    if count is not None and "{count_hint}" not in cfg.checkworthy_template:
        raise PromptTemplateError(
            "informed extraction requires a {count_hint} placeholder in the "
            "check-worthiness template"
        )
    numbered = "\n".join(f"{i + 1}. {claim}" for i, claim in enumerate(claims))
    prompt = _fill(
        cfg.checkworthy_template,
        claims=numbered,
        document=doc.text,
        count_hint=_hint(cfg, count),
    )
    returned = parse_claim_list(client.complete(prompt))

    # Match returned claims back to input slots (exact match after
    # normalization); each answer consumes the earliest unused slot.
    available: dict[str, list[int]] = {}
    for idx, claim in enumerate(claims):
        available.setdefault(canonical_claim(claim), []).append(idx)
    kept: list[int] = []
    aliens: list[str] = []
    for item in returned:
        slots = available.get(canonical_claim(item))
        if slots:
            kept.append(slots.pop(0))
        else:
            aliens.append(item)
    if aliens:
        raise ExtractionProtocolError(aliens)
    return [claims[i] for i in sorted(kept)]


def run_extraction(
    doc: Document,
    cfg: ExtractionConfig,
    client: ChatClient,
    *,
    expected_count: int | None = None,
) -> ExtractionTrace:
    """Run both pipeline steps for one document."""
    started = time.perf_counter()
    raw = extract_claims(doc, cfg, client, expected_count=expected_count)
    checkworthy = filter_checkworthy(
        raw, doc, cfg, client, expected_count=expected_count
    )
    count = expected_count if expected_count is not None else cfg.informed_count
    if count is not None and len(checkworthy) != count:
        log.info(
            "document %s: model returned %d claims, expected %d",
            doc.id, len(checkworthy), count,
        )
    return ExtractionTrace(
        doc_id=doc.id,
        raw_claims=tuple(raw),
        checkworthy_claims=tuple(checkworthy),
        model_id=cfg.model_id,
        duration_s=time.perf_counter() - started,
        expected_count=count,
    )


def extract_informed(
    doc: Document,
    expected_count: int,
    cfg: ExtractionConfig,
    client: ChatClient,
) -> list[str]:
    """Two-step extraction with the expected claim count disclosed.

    The count is injected into both templates as a hint only; output length
    is never forced to match.
    """
    if expected_count < 1:
        raise ValueError(f"expected_count must be >= 1, got {expected_count}")
    trace = run_extraction(doc, cfg, client, expected_count=expected_count)
    return list(trace.checkworthy_claims)
