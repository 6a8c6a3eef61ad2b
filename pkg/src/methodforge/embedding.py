"""Deterministic token-hashing embedder and cosine helpers.

The embedder must produce identical vectors for identical text across runs,
machines, and platforms, so token bucketing uses keyed blake2b rather than
Python's randomized hash().
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError

_TOKEN_RE = re.compile(r"[a-z0-9]+")

DEFAULT_DIMENSION = 256
DEFAULT_SEED = 1729


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase and split on non-alphanumerics; order preserved."""
    return tuple(_TOKEN_RE.findall(text.lower()))


class HashingEmbedder:
    """Bag-of-words embedder: hash each token into one of `dimension` buckets.

    Vectors are L2-normalized; empty text maps to the all-zero vector.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, seed: int = DEFAULT_SEED) -> None:
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.seed = seed
        self._key = str(seed).encode("utf-8")
        # Per-instance cache; bucket of a token depends only on (seed, dimension, token).
        self._bucket = lru_cache(maxsize=65536)(self._bucket_uncached)

    def _bucket_uncached(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self._key).digest()
        return int.from_bytes(digest, "big") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            vec[self._bucket(token)] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Raw cosine similarity; 0.0 when either vector has zero norm."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"vector dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    denom = float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def relevance_from_vectors(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine mapped from [-1, 1] to [0, 1]; zero vectors land on 0.5."""
    return (cosine(a, b) + 1.0) / 2.0
