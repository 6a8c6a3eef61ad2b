"""Core domain types: methods, problems, solutions, and score cards."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .embedding import tokenize
from .errors import ValidationError

EFFECTIVENESS_PRIOR = 0.5

# Field and record separators for the content digest; chosen so that
# reordering or re-splitting parts always changes the digest.
_FIELD_SEP = "\x1f"
_PART_SEP = "\x1e"


class MethodFormat(Enum):
    INTERNAL_PROMPT = "internal-prompt"
    EXTERNAL_EXECUTABLE = "external-executable"


class ContentSource(Enum):
    TRAINING_DATA = "training_data"
    LLM_OUTPUT = "llm_output"
    USER_INPUT = "user_input"


@dataclass(frozen=True)
class Scope:
    """Storage visibility: global, or private to one user."""

    kind: str  # "global" | "user"
    user_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("global", "user"):
            raise ValidationError(f"unknown scope kind: {self.kind!r}")
        if self.kind == "user" and not self.user_id:
            raise ValidationError("user scope requires a user_id")
        if self.kind == "global" and self.user_id is not None:
            raise ValidationError("global scope must not carry a user_id")

    @classmethod
    def global_scope(cls) -> "Scope":
        return cls(kind="global")

    @classmethod
    def user(cls, user_id: str) -> "Scope":
        return cls(kind="user", user_id=user_id)

    def key(self) -> str:
        return "global" if self.kind == "global" else f"user:{self.user_id}"

    @classmethod
    def from_key(cls, key: str) -> "Scope":
        if key == "global":
            return cls.global_scope()
        if key.startswith("user:"):
            return cls.user(key[len("user:"):])
        raise ValidationError(f"unknown scope key: {key!r}")


@dataclass(frozen=True, eq=False)
class ProblemFeatures:
    """Embedding vector plus the normalized token multiset of the text."""

    vector: np.ndarray
    tokens: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True, eq=False)
class ProblemStatement:
    text: str
    features: ProblemFeatures


@dataclass(frozen=True)
class SolutionPart:
    role: str
    text: str
    part_score: float = EFFECTIVENESS_PRIOR


@dataclass(frozen=True)
class ExternalRef:
    descriptor: str
    link: str


@dataclass(frozen=True)
class Solution:
    parts: tuple[SolutionPart, ...]
    external_refs: tuple[ExternalRef, ...] = ()


@dataclass(frozen=True)
class ScoreCard:
    effectiveness: float = EFFECTIVENESS_PRIOR
    rated: bool = False
    times_used: int = 0
    times_top_ranked: int = 0


@dataclass(frozen=True, eq=False)
class Method:
    """The atom of the system: a problem paired with its solution."""

    id: str
    problem: ProblemStatement
    solution: Solution
    format: MethodFormat
    scope: Scope
    source: ContentSource
    created_at: int = 0
    score: ScoreCard = field(default_factory=ScoreCard)
    extraction_confidence: float | None = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Method) and other.id == self.id

    def __hash__(self) -> int:
        return hash(self.id)

    def with_score(self, score: ScoreCard) -> "Method":
        return replace(self, score=score)


@dataclass(frozen=True)
class RefinementEdge:
    """refiner_id refines or validates target_id."""

    refiner_id: str
    target_id: str


def method_id(problem_text: str, solution_parts: Sequence[SolutionPart | str]) -> str:
    """Deterministic content digest over the problem text and ordered parts.

    Accepts bare strings for convenience; they hash as parts with an empty role.
    """
    if not problem_text.strip():
        raise ValidationError("problem text must be non-empty")
    pieces = [problem_text]
    for part in solution_parts:
        if isinstance(part, SolutionPart):
            pieces.append(part.role + _PART_SEP + part.text)
        else:
            pieces.append("" + _PART_SEP + part)
    payload = _FIELD_SEP.join(pieces)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def make_problem(text: str, vector: np.ndarray) -> ProblemStatement:
    return ProblemStatement(text=text, features=ProblemFeatures(vector=vector, tokens=tokenize(text)))


def make_method(
    problem: ProblemStatement,
    solution: Solution,
    *,
    format: MethodFormat = MethodFormat.INTERNAL_PROMPT,
    scope: Scope | None = None,
    source: ContentSource = ContentSource.USER_INPUT,
    created_at: int = 0,
    score: ScoreCard | None = None,
    extraction_confidence: float | None = None,
) -> Method:
    """Build a method with its content-derived id."""
    return Method(
        id=method_id(problem.text, solution.parts),
        problem=problem,
        solution=solution,
        format=format,
        scope=scope or Scope.global_scope(),
        source=source,
        created_at=created_at,
        score=score or ScoreCard(),
        extraction_confidence=extraction_confidence,
    )


def validate_method(method: Method) -> list[str]:
    """Return every violated invariant; empty list means the method is valid."""
    violations: list[str] = []
    if not method.problem.text.strip():
        violations.append("problem text non-empty")
    if not method.solution.parts:
        violations.append("parts non-empty")
    for i, part in enumerate(method.solution.parts, start=1):
        if not part.text.strip():
            violations.append(f"part {i} text non-empty")
        if not part.role:
            violations.append(f"part {i} role non-empty")
        if not 0.0 <= part.part_score <= 1.0:
            violations.append(f"part {i} score in [0,1]")
    if method.format is MethodFormat.EXTERNAL_EXECUTABLE and not method.solution.external_refs:
        violations.append("external ref required")
    if method.problem.text.strip() and method.solution.parts:
        expected = method_id(method.problem.text, method.solution.parts)
        if method.id != expected:
            violations.append("id matches content digest")
    norm = float(np.linalg.norm(method.problem.features.vector))
    if method.problem.text.strip():
        if abs(norm - 1.0) > 1e-9 and norm != 0.0:
            violations.append("feature vector L2-normalized or zero")
    elif norm != 0.0:
        violations.append("empty text must have zero feature vector")
    score = method.score
    if not 0.0 <= score.effectiveness <= 1.0:
        violations.append("effectiveness in [0,1]")
    if not score.rated and score.effectiveness != EFFECTIVENESS_PRIOR:
        violations.append("unrated effectiveness equals prior")
    if score.times_used < 0 or score.times_top_ranked < 0:
        violations.append("counters non-negative")
    if score.times_top_ranked > score.times_used:
        violations.append("times_top_ranked <= times_used")
    if method.extraction_confidence is not None and not 0.0 <= method.extraction_confidence <= 1.0:
        violations.append("extraction confidence in [0,1]")
    return violations
