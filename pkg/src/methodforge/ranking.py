"""Dual ranking: user-feedback effectiveness scores and LLM-guided selection.

External feedback arrives as full orderings of candidate outputs. Each rank r
among n maps to the normalized score (n - r) / (n - 1), which is folded into
the method's effectiveness with an exponential moving average. Selection
maximizes relevance x effectiveness; the LLM may override the choice among
the externally filtered candidates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import RankingError, SelectionError, ValidationError
from .gateway import Backend, GatewayRequest
from .model import Method, ProblemStatement
from .prompts import PromptLibrary, default_prompts
from .repository import MethodRepository
from . import embedding


@dataclass(frozen=True)
class RankedOutcome:
    """A full ordering of candidates: (candidate id, rank position 1..n)."""

    ordering: tuple[tuple[str, int], ...]

    @property
    def n(self) -> int:
        return len(self.ordering)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("an outcome needs at least one candidate")
        positions = sorted(rank for _, rank in self.ordering)
        if positions != list(range(1, self.n + 1)):
            raise ValidationError(f"ranks must be a permutation of 1..{self.n}")
        ids = [cid for cid, _ in self.ordering]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate candidate ids in outcome")


@dataclass(frozen=True)
class UtilityBreakdown:
    relevance: float
    effectiveness: float

    @property
    def utility(self) -> float:
        return self.relevance * self.effectiveness


def relevance(a: np.ndarray, b: np.ndarray) -> float:
    """Semantic similarity in [0, 1]: cosine rescaled by (c + 1) / 2."""
    return embedding.relevance_from_vectors(a, b)


def utility(method: Method, problem: ProblemStatement) -> UtilityBreakdown:
    rel = relevance(method.problem.features.vector, problem.features.vector)
    return UtilityBreakdown(relevance=rel, effectiveness=method.score.effectiveness)


def select_best(candidates: list[Method], problem: ProblemStatement) -> tuple[Method, list[Method]]:
    """Argmax of utility; ties break toward higher effectiveness, then recency."""
    if not candidates:
        raise SelectionError("no candidates to select from")
    scored = [
        (utility(m, problem).utility, m.score.effectiveness, m.created_at, i, m)
        for i, m in enumerate(candidates)
    ]
    scored.sort(key=lambda item: (-item[0], -item[1], -item[2], item[3]))
    best = scored[0][4]
    alternatives = [item[4] for item in scored[1:]]
    return best, alternatives


def is_applicable(method: Method, new_problem: ProblemStatement, theta: float) -> bool:
    """Generalization gate: the method transfers when relevance clears theta."""
    return relevance(method.problem.features.vector, new_problem.features.vector) >= theta


def _summarize(text: str, limit: int = 160) -> str:
    flat = " ".join(text.split())
    return flat if len(flat) <= limit else flat[: limit - 3] + "..."


def internal_select(
    gateway: Backend,
    candidates: list[Method],
    query: str,
    problem: ProblemStatement,
    prompts: PromptLibrary | None = None,
) -> tuple[Method, str]:
    """Ask the LLM to pick one candidate by index; unparsable replies fall
    back to the utility argmax. Returns (chosen method, rationale text)."""
    if not candidates:
        raise SelectionError("no candidates to select from")
    if len(candidates) == 1:
        return candidates[0], "single candidate"
    prompts = prompts or default_prompts()
    lines = []
    for i, method in enumerate(candidates, start=1):
        steps = "; ".join(part.text for part in method.solution.parts)
        lines.append(f"{i}. problem: {_summarize(method.problem.text)} | solution: {_summarize(steps)}")
    prompt = prompts.render("select", candidates="\n".join(lines), query=query)
    reply = gateway.complete(GatewayRequest.user(prompt))
    match = re.search(r"\d+", reply)
    if match:
        index = int(match.group())
        if 1 <= index <= len(candidates):
            return candidates[index - 1], reply.strip()
    best, _ = select_best(candidates, problem)
    return best, f"fallback to utility argmax (unparsable reply: {reply.strip()[:80]!r})"


def rank_score(rank: int, n: int) -> float:
    """Normalized Borda-style score: rank 1 of n maps to 1.0, rank n to 0.0."""
    if n < 2:
        raise ValueError("rank_score needs n >= 2")
    return (n - rank) / (n - 1)


def record_feedback(
    repository: MethodRepository,
    outcome: RankedOutcome,
    alpha: float | None = None,
) -> dict[str, Method]:
    """Fold one user ranking into the score cards of all ranked methods.

    With a single candidate only the usage counters move; effectiveness needs
    a comparison signal.
    """
    alpha = alpha if alpha is not None else repository.settings.alpha
    for cid, _ in outcome.ordering:
        if cid not in repository:
            raise RankingError(f"ranked candidate {cid[:12]} is not stored")
    updated: dict[str, Method] = {}
    for cid, rank in outcome.ordering:
        method = repository.get(cid)
        score = method.score
        if outcome.n >= 2:
            target = rank_score(rank, outcome.n)
            score = replace(
                score,
                effectiveness=(1.0 - alpha) * score.effectiveness + alpha * target,
                rated=True,
            )
        score = replace(
            score,
            times_used=score.times_used + 1,
            times_top_ranked=score.times_top_ranked + (1 if rank == 1 else 0),
        )
        updated[cid] = repository.update_score(cid, score)
    return updated
