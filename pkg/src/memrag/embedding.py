"""Text embedding: a deterministic builtin encoder and a remote client.

Both produce 384-dimensional unit vectors. The builtin encoder hashes
character trigrams of the lowercased text with FNV-1a into signed buckets,
so it is pure, model-free, and keeps lexically similar texts close; the
remote client speaks the common embedding-service wire shape
``POST {"model", "input": [...]} -> {"data": [{"index", "embedding"}]}``
and re-normalizes responses locally. Queries and documents go through the
identical path.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import httpx
import numpy as np

from .errors import BackendError, ValidationError

DIMENSION = 384
DEFAULT_MODEL_NAME = "BAAI/bge-small-en"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    value = _FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & _MASK64
    return value


@functools.lru_cache(maxsize=1 << 20)
def _gram_slot(gram: str) -> tuple[int, float]:
    digest = fnv1a64(gram.encode("utf-8"))
    return digest % DIMENSION, 1.0 if (digest >> 63) == 0 else -1.0


@dataclass(frozen=True)
class EmbedderConfig:
    backend: str = "builtin"  # "builtin" | "remote"
    endpoint_url: str = ""
    model_name: str = DEFAULT_MODEL_NAME
    timeout: float = 10.0

    def __post_init__(self) -> None:
        if self.backend not in ("builtin", "remote"):
            raise ValidationError(f"unknown embedder backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint_url:
            raise ValidationError("remote embedder requires endpoint_url")
        if self.timeout <= 0:
            raise ValidationError("timeout must be positive")


def _require_text(text: str, index: int | None = None) -> None:
    where = "" if index is None else f" at index {index}"
    if not isinstance(text, str) or not text.strip():
        raise ValidationError(f"cannot embed empty or whitespace-only text{where}")


class BuiltinEmbedder:
    """Deterministic trigram-hashing encoder; no model, no randomness."""

    dimension = DIMENSION

    def embed(self, text: str) -> np.ndarray:
        _require_text(text)
        lowered = text.lower()
        if len(lowered) >= 3:
            grams = (lowered[i : i + 3] for i in range(len(lowered) - 2))
        else:
            grams = (lowered,)
        vector = np.zeros(DIMENSION, dtype=np.float64)
        for gram in grams:
            slot, sign = _gram_slot(gram)
            vector[slot] += sign
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            # Signed buckets cancelled out entirely; fall back to a one-hot.
            vector[fnv1a64(lowered.encode("utf-8")) % DIMENSION] = 1.0
            return vector
        vector /= norm
        return vector

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        for index, text in enumerate(texts):
            _require_text(text, index)
        return [self.embed(text) for text in texts]

    def close(self) -> None:
        pass


class RemoteEmbedder:
    """HTTP client for an external embedding service. No silent fallback."""

    dimension = DIMENSION

    def __init__(self, config: EmbedderConfig, transport: httpx.BaseTransport | None = None):
        self._config = config
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        for index, text in enumerate(texts):
            _require_text(text, index)
        if not texts:
            return []
        payload = {"model": self._config.model_name, "input": list(texts)}
        try:
            response = self._client.post(self._config.endpoint_url, json=payload)
        except httpx.TimeoutException as exc:
            raise BackendError(f"embedding request timed out: {exc}", reason="timeout") from exc
        except httpx.HTTPError as exc:
            raise BackendError(f"embedding request failed: {exc}", reason="transport") from exc
        if not 200 <= response.status_code < 300:
            raise BackendError(
                f"embedding service returned HTTP {response.status_code}", reason="status"
            )
        try:
            data = response.json()["data"]
            rows = sorted(data, key=lambda item: item["index"])
            vectors = [np.asarray(row["embedding"], dtype=np.float64) for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed embedding response: {exc}", reason="protocol") from exc
        if len(vectors) != len(texts):
            raise BackendError(
                f"embedding service returned {len(vectors)} vectors for {len(texts)} inputs",
                reason="protocol",
            )
        normalized = []
        for vector in vectors:
            if vector.shape != (DIMENSION,):
                raise BackendError(
                    f"embedding dimension {vector.shape} != ({DIMENSION},)", reason="dimension"
                )
            norm = float(np.linalg.norm(vector))
            if norm == 0.0 or not np.isfinite(vector).all():
                raise BackendError("embedding service returned a degenerate vector", reason="protocol")
            normalized.append(vector / norm)
        return normalized

    def close(self) -> None:
        self._client.close()


def make_embedder(
    config: EmbedderConfig | None = None, transport: httpx.BaseTransport | None = None
) -> BuiltinEmbedder | RemoteEmbedder:
    cfg = config or EmbedderConfig()
    if cfg.backend == "builtin":
        return BuiltinEmbedder()
    return RemoteEmbedder(cfg, transport=transport)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; equals the raw dot product for unit vectors."""
    left = np.asarray(a, dtype=np.float64)
    right = np.asarray(b, dtype=np.float64)
    if left.shape != (DIMENSION,) or right.shape != (DIMENSION,):
        raise ValidationError(
            f"cosine expects two ({DIMENSION},) vectors, got {left.shape} and {right.shape}"
        )
    norm_left = float(np.linalg.norm(left))
    norm_right = float(np.linalg.norm(right))
    if norm_left == 0.0 or norm_right == 0.0:
        raise ValidationError("cosine is undefined for zero vectors")
    value = float(np.dot(left, right)) / (norm_left * norm_right)
    return max(-1.0, min(1.0, value))
