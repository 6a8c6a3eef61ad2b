"""Always-on method mining: classify content, extract problem/solution pairs,
threshold-filter, and store.

The gateway reply contract is line-delimited (IS_METHOD / PROBLEM / SOLUTION /
CONFIDENCE) so the same parser serves scripted mocks and live models.
Extraction confidence is metadata only; filtering runs on user-feedback
effectiveness, and unrated methods always pass the filter.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import ExtractionParseError, TransportError, ValidationError
from .gateway import Backend, GatewayRequest
from .model import (
    ContentSource,
    ExternalRef,
    Method,
    MethodFormat,
    Scope,
    Solution,
    SolutionPart,
    make_method,
    make_problem,
)
from .prompts import PromptLibrary, default_prompts
from .repository import MethodRepository

logger = logging.getLogger(__name__)

_URL_RE = re.compile(r"https?://\S+")
_FIELDS = ("IS_METHOD", "PROBLEM", "SOLUTION", "CONFIDENCE")


@dataclass(frozen=True)
class MethodJudgment:
    is_method: bool
    problem_text: str | None = None
    solution_text: str | None = None
    confidence: float = 0.0


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[Method, ...]
    source: ContentSource


def parse_judgment(reply: str) -> MethodJudgment:
    """Parse the delimited reply; continuation lines extend the open field."""
    values: dict[str, list[str]] = {}
    current: str | None = None
    for line in reply.splitlines():
        stripped = line.strip()
        matched = False
        for name in _FIELDS:
            prefix = name + ":"
            if stripped.upper().startswith(prefix):
                values[name] = [stripped[len(prefix):].strip()]
                current = name
                matched = True
                break
        if not matched and current is not None and stripped:
            values[current].append(stripped)
    if "IS_METHOD" not in values:
        raise ExtractionParseError(f"no IS_METHOD field in reply: {reply[:120]!r}")
    flag = " ".join(values["IS_METHOD"]).strip().lower()
    is_method = flag.startswith(("yes", "true", "y"))
    if not is_method:
        return MethodJudgment(is_method=False)
    problem = "\n".join(values.get("PROBLEM", [])).strip()
    solution = "\n".join(values.get("SOLUTION", [])).strip()
    if not problem or not solution:
        raise ExtractionParseError("IS_METHOD is yes but PROBLEM or SOLUTION is missing")
    confidence = 0.5
    raw_confidence = " ".join(values.get("CONFIDENCE", [])).strip()
    if raw_confidence:
        try:
            confidence = min(1.0, max(0.0, float(raw_confidence)))
        except ValueError:
            logger.debug("unparsable confidence %r, using 0.5", raw_confidence)
    return MethodJudgment(
        is_method=True, problem_text=problem, solution_text=solution, confidence=confidence
    )


def classify_content(
    gateway: Backend,
    content: str,
    source: ContentSource,
    prompts: PromptLibrary | None = None,
) -> MethodJudgment:
    if not content.strip():
        raise ValidationError("content must be non-empty")
    prompts = prompts or default_prompts()
    reply = gateway.complete(GatewayRequest.user(prompts.render("classify", content=content)))
    return parse_judgment(reply)


def _build_method(
    gateway: Backend,
    judgment: MethodJudgment,
    source: ContentSource,
    scope: Scope,
) -> Method:
    assert judgment.problem_text and judgment.solution_text
    links = _URL_RE.findall(judgment.solution_text)
    refs = tuple(ExternalRef(descriptor="linked resource", link=link) for link in links)
    return make_method(
        problem=make_problem(judgment.problem_text, gateway.embed(judgment.problem_text)),
        solution=Solution(
            parts=(SolutionPart(role="whole", text=judgment.solution_text),),
            external_refs=refs,
        ),
        format=MethodFormat.EXTERNAL_EXECUTABLE if refs else MethodFormat.INTERNAL_PROMPT,
        scope=scope,
        source=source,
        extraction_confidence=judgment.confidence,
    )


def extract_candidates(
    gateway: Backend,
    contents: list[tuple[str, ContentSource]],
    scope: Scope | None = None,
    prompts: PromptLibrary | None = None,
) -> CandidateSet:
    """Classify every item; item-level failures are skipped, never fatal."""
    scope = scope or Scope.global_scope()
    source = contents[0][1] if contents else ContentSource.USER_INPUT
    methods: list[Method] = []
    for text, item_source in contents:
        try:
            judgment = classify_content(gateway, text, item_source, prompts=prompts)
        except (ExtractionParseError, TransportError, ValidationError) as exc:
            logger.warning("skipping content item (%s): %s", type(exc).__name__, exc)
            continue
        if judgment.is_method:
            methods.append(_build_method(gateway, judgment, item_source, scope))
    return CandidateSet(candidates=tuple(methods), source=source)


def filter_candidates(candidates: list[Method], tau: float) -> list[Method]:
    """Keep rated methods at or above tau; unrated ones bypass the filter."""
    if not 0.0 <= tau <= 1.0:
        raise ValidationError(f"tau must be in [0,1], got {tau}")
    return [m for m in candidates if not m.score.rated or m.score.effectiveness >= tau]


def ingest(
    repository: MethodRepository,
    gateway: Backend,
    content: str,
    source: ContentSource,
    scope: Scope | None = None,
    tau: float | None = None,
    prompts: PromptLibrary | None = None,
) -> list[str]:
    """Extract, filter, and store methods from one piece of content.

    Returns the ids stored by this call; content whose method is already
    stored contributes nothing (idempotence by content digest).
    """
    tau = tau if tau is not None else repository.settings.tau
    candidate_set = extract_candidates(gateway, [(content, source)], scope=scope, prompts=prompts)
    stored: list[str] = []
    for method in filter_candidates(list(candidate_set.candidates), tau):
        if method.id in repository:
            continue
        repository.insert_method(method)
        stored.append(method.id)
    return stored
