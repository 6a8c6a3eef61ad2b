from __future__ import annotations

import pytest

from methodforge.config import Settings
from methodforge.embedding import HashingEmbedder
from methodforge.gateway import MockBackend, MockFixture, MockRule
from methodforge.model import (
    ContentSource,
    Scope,
    Solution,
    SolutionPart,
    make_method,
    make_problem,
)
from methodforge.repository import MethodRepository

SMALL_DIM = 32
SEED = 7


@pytest.fixture
def settings() -> Settings:
    return Settings(dimension=SMALL_DIM, seed=SEED)


@pytest.fixture
def embedder(settings) -> HashingEmbedder:
    return HashingEmbedder(dimension=settings.dimension, seed=settings.seed)


@pytest.fixture
def repo(settings) -> MethodRepository:
    return MethodRepository(settings)


def build_method(
    embedder: HashingEmbedder,
    problem_text: str,
    part_texts: list[str] | None = None,
    *,
    scope: Scope | None = None,
    source: ContentSource = ContentSource.USER_INPUT,
):
    parts = tuple(
        SolutionPart(role=f"step{i}", text=text)
        for i, text in enumerate(part_texts or ["do the thing"], start=1)
    )
    return make_method(
        problem=make_problem(problem_text, embedder.embed(problem_text)),
        solution=Solution(parts=parts),
        scope=scope,
        source=source,
    )


def scripted_backend(embedder: HashingEmbedder, rules: list[tuple[str, str]], default: str = ""):
    fixture = MockFixture(
        rules=tuple(MockRule(pattern=p, reply=r) for p, r in rules),
        default_reply=default,
    )
    return MockBackend(fixture, embedder)
