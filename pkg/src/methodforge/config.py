"""Runtime settings with documented defaults; loadable from a single YAML file.

Keys and defaults:

  tau        0.3    filtering threshold on rated effectiveness; unrated methods bypass it
  theta      0.75   relevance threshold gating method applicability (and tree attachment)
  mu         0.95   relevance at or above which two problems share one tree node
  alpha      0.3    EMA weight folding a new rank score into effectiveness
  k          5      maximum candidates retrieved and shown to the gateway
  n_out      3      maximum candidate outputs generated per turn
  dimension  256    embedding dimension D
  seed       1729   token-hashing seed; persisted with the repository
  backend    mock   "mock" or "live"

Live-backend keys (ignored by the mock): base_url, model, embed_model.
Optional: fixture (mock fixture path), prompts_dir (template override directory).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from .errors import ConfigurationError

_FLOAT_KEYS = ("tau", "theta", "mu", "alpha")
_INT_KEYS = ("k", "n_out", "dimension", "seed")
_STR_KEYS = ("backend", "base_url", "model", "embed_model", "fixture", "prompts_dir")


@dataclass(frozen=True)
class Settings:
    tau: float = 0.3
    theta: float = 0.75
    mu: float = 0.95
    alpha: float = 0.3
    k: int = 5
    n_out: int = 3
    dimension: int = 256
    seed: int = 1729
    backend: str = "mock"
    base_url: str | None = None
    model: str | None = None
    embed_model: str | None = None
    fixture: str | None = None
    prompts_dir: str | None = None

    def __post_init__(self) -> None:
        for name in ("tau", "theta", "mu", "alpha"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must be in [0,1], got {value}")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.n_out < 1:
            raise ConfigurationError("n_out must be >= 1")
        if self.dimension < 1:
            raise ConfigurationError("dimension must be >= 1")
        if self.backend not in ("mock", "live"):
            raise ConfigurationError(f"backend must be 'mock' or 'live', got {self.backend!r}")


def load_settings(path: str | Path | None = None, **overrides) -> Settings:
    """Read settings from a YAML file, then apply keyword overrides."""
    data: dict = {}
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
        loaded = yaml.safe_load(raw) or {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"config file {path} must contain a mapping")
        data = loaded
    known = set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_STR_KEYS)
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key in _FLOAT_KEYS:
        if key in data:
            data[key] = float(data[key])
    for key in _INT_KEYS:
        if key in data:
            data[key] = int(data[key])
    settings = Settings(**data)
    if overrides:
        overrides = {k: v for k, v in overrides.items() if v is not None}
        settings = replace(settings, **overrides)
    return settings
