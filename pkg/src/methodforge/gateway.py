"""Pluggable LLM boundary: a scripted mock for offline runs and an
OpenAI-compatible live client.

Both backends expose the same two calls: ``complete`` for chat and ``embed``
for feature vectors. Embedding defaults to the deterministic token-hashing
embedder even under the live backend, unless an embedding model is configured.
"""

from __future__ import annotations

import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np
import yaml

from .config import Settings
from .embedding import HashingEmbedder
from .errors import ConfigurationError, TransportError, ValidationError

API_KEY_ENV = "METHODFORGE_API_KEY"


@dataclass(frozen=True)
class GatewayRequest:
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValidationError("request needs at least one message")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")

    @classmethod
    def user(cls, text: str) -> "GatewayRequest":
        return cls(messages=(("user", text),))

    def last_user_message(self) -> str:
        for role, text in reversed(self.messages):
            if role == "user":
                return text
        return self.messages[-1][1]


class Backend(Protocol):
    def complete(self, request: GatewayRequest) -> str: ...

    def embed(self, text: str) -> np.ndarray: ...


@dataclass(frozen=True)
class MockRule:
    pattern: str
    reply: str
    kind: str = "substring"  # "substring" | "regex"

    def matches(self, message: str) -> bool:
        if self.kind == "substring":
            return self.pattern in message
        return re.search(self.pattern, message) is not None


@dataclass(frozen=True)
class MockFixture:
    """Ordered match rules over the last user message; first match wins."""

    rules: tuple[MockRule, ...] = ()
    default_reply: str = ""
    embeddings: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def reply_for(self, message: str) -> str:
        for rule in self.rules:
            if rule.matches(message):
                return rule.reply
        return self.default_reply


def load_fixture(path: str | Path) -> MockFixture:
    """Load a fixture file (YAML: rules/default_reply/embeddings)."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"fixture {path} must contain a mapping")
    rules = []
    for i, entry in enumerate(raw.get("rules", [])):
        if not isinstance(entry, dict) or "match" not in entry or "reply" not in entry:
            raise ConfigurationError(f"fixture rule {i} needs 'match' and 'reply'")
        kind = entry.get("kind", "substring")
        if kind not in ("substring", "regex"):
            raise ConfigurationError(f"fixture rule {i} kind must be substring or regex")
        rules.append(MockRule(pattern=str(entry["match"]), reply=str(entry["reply"]), kind=kind))
    embeddings = {
        str(text): tuple(float(v) for v in vec)
        for text, vec in (raw.get("embeddings") or {}).items()
    }
    return MockFixture(
        rules=tuple(rules),
        default_reply=str(raw.get("default_reply", "")),
        embeddings=embeddings,
    )


class MockBackend:
    """Deterministic scripted backend for tests and offline evaluation."""

    def __init__(self, fixture: MockFixture, embedder: HashingEmbedder) -> None:
        self.fixture = fixture
        self.embedder = embedder

    def complete(self, request: GatewayRequest) -> str:
        return self.fixture.reply_for(request.last_user_message())

    def embed(self, text: str) -> np.ndarray:
        override = self.fixture.embeddings.get(text)
        if override is not None:
            vec = np.asarray(override, dtype=np.float64)
            if vec.shape[0] != self.embedder.dimension:
                raise ConfigurationError(
                    f"embedding override for {text!r} has dimension {vec.shape[0]}, "
                    f"expected {self.embedder.dimension}"
                )
            return vec
        return self.embedder.embed(text)


class LiveBackend:
    """OpenAI-compatible chat client with retry/backoff on transient failures.

    Embedding uses the deterministic embedder unless ``embed_model`` is set,
    in which case the /embeddings endpoint is called.
    """

    MAX_ATTEMPTS = 3

    def __init__(
        self,
        base_url: str,
        model: str,
        embedder: HashingEmbedder,
        api_key: str | None = None,
        embed_model: str | None = None,
        timeout: float = 60.0,
    ) -> None:
        if not base_url:
            raise ConfigurationError("live backend requires a base_url")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.embedder = embedder
        self.embed_model = embed_model
        self.timeout = timeout
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, endpoint: str, payload: dict) -> dict:
        import httpx

        url = f"{self.base_url}{endpoint}"
        delay = 0.5
        last_error: Exception | None = None
        for attempt in range(self.MAX_ATTEMPTS):
            try:
                response = httpx.post(url, json=payload, headers=self._headers(), timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code < 400:
                    return response.json()
                if 400 <= response.status_code < 500:
                    raise ConfigurationError(
                        f"{endpoint} returned {response.status_code}: {response.text[:200]}"
                    )
                last_error = TransportError(f"{endpoint} returned {response.status_code}")
            if attempt + 1 < self.MAX_ATTEMPTS:
                time.sleep(delay)
                delay *= 2
        raise TransportError(f"{url} unreachable after {self.MAX_ATTEMPTS} attempts: {last_error}")

    def complete(self, request: GatewayRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": role, "content": text} for role, text in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        data = self._post("/chat/completions", payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat completion response: {exc}") from exc

    def embed(self, text: str) -> np.ndarray:
        if self.embed_model is None:
            return self.embedder.embed(text)
        data = self._post("/embeddings", {"model": self.embed_model, "input": text})
        try:
            return np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed embeddings response: {exc}") from exc


def make_backend(settings: Settings, fixture: MockFixture | None = None) -> Backend:
    embedder = HashingEmbedder(dimension=settings.dimension, seed=settings.seed)
    if settings.backend == "mock":
        if fixture is None:
            fixture = load_fixture(settings.fixture) if settings.fixture else MockFixture()
        return MockBackend(fixture, embedder)
    if not settings.base_url or not settings.model:
        raise ConfigurationError("live backend requires base_url and model")
    return LiveBackend(
        base_url=settings.base_url,
        model=settings.model,
        embedder=embedder,
        embed_model=settings.embed_model,
    )
