"""Embedding providers for the similarity evaluation.

Three backends share one interface: a remote embeddings endpoint, a file of
precomputed vectors, and a deterministic feature-hashing stub for tests.
"""

import hashlib
import logging
import re
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional, Self

import httpx
import numpy as np
import orjson

from src.pipeline.config import RunConfig
from src.pipeline.errors import ConfigError, EmbeddingError, ProviderContentError, TransportError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9']+")


class EmbeddingProvider(ABC):
    """Turns texts into fixed-dimension vectors."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Provider name."""

    @abstractmethod
    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        """Embed one batch, order-preserving."""

    def close(self) -> None:
        """Release provider resources."""

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


class HashEmbeddingProvider(EmbeddingProvider):
    """Deterministic feature-hashing embeddings (signed token buckets, L2-normalized)."""

    def __init__(self, dim: int = 384) -> None:
        if dim <= 0:
            raise ConfigError("embedding_dim must be > 0")
        self.dim = dim

    @property
    def name(self) -> str:
        return "hash"

    def _bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "big") % self.dim
        sign = -1.0 if digest[8] & 1 else 1.0
        return bucket, sign * (1.0 + digest[9] / 255.0 * 0.25)

    def embed_text(self, text: str) -> list[float]:
        """Embed a single text."""
        tokens = _TOKEN_RE.findall(text.lower()) or [text]
        vector = np.zeros(self.dim)
        for token in tokens:
            bucket, weight = self._bucket(token)
            vector[bucket] += weight
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            # Opposite-signed tokens cancelled out; fall back to the whole text
            bucket, weight = self._bucket(text)
            vector[bucket] = weight
            norm = abs(weight)
        return [float(v) for v in vector / norm]

    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        return [self.embed_text(t) for t in texts]


class VectorsFileProvider(EmbeddingProvider):
    """Precomputed vectors: JSON object mapping text to vector."""

    def __init__(self, path: Path) -> None:
        if not path.exists():
            raise ConfigError(f"Embedding vectors file not found: {path}")
        self.path = path
        self._vectors: dict[str, list[float]] = orjson.loads(path.read_bytes())

    @property
    def name(self) -> str:
        return f"file:{self.path.name}"

    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        missing = [t for t in texts if t not in self._vectors]
        if missing:
            raise EmbeddingError(
                f"{len(missing)} texts have no precomputed vector, e.g. {missing[0]!r}"
            )
        return [self._vectors[t] for t in texts]


class HttpEmbeddingProvider(EmbeddingProvider):
    """OpenAI-style embeddings endpoint."""

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        api_key: str,
        timeout_s: float = 120.0,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.endpoint = endpoint
        self.model_id = model_id
        self._headers = {"Authorization": f"Bearer {api_key}"}
        self._client = client or httpx.Client(timeout=timeout_s)

    @property
    def name(self) -> str:
        return f"http:{self.model_id}"

    def close(self) -> None:
        self._client.close()

    def embed_batch(self, texts: list[str]) -> list[list[float]]:
        try:
            response = self._client.post(
                self.endpoint, json={"model": self.model_id, "input": texts}, headers=self._headers
            )
        except httpx.TransportError as e:
            raise TransportError(f"Embedding request failed: {e}") from e
        if response.status_code != 200:
            raise ProviderContentError(f"Embedding endpoint returned HTTP {response.status_code}")
        try:
            data = sorted(response.json()["data"], key=lambda item: item["index"])
            return [item["embedding"] for item in data]
        except (ValueError, KeyError, TypeError) as e:
            raise ProviderContentError("Malformed embeddings payload") from e


def embed(texts: list[str], provider: EmbeddingProvider, batch_size: int = 64) -> np.ndarray:
    """Embed texts in batches; one finite row per text, constant dimension."""
    if not texts:
        raise EmbeddingError("Nothing to embed")

    rows: list[list[float]] = []
    for start in range(0, len(texts), batch_size):
        batch = texts[start : start + batch_size]
        vectors = provider.embed_batch(batch)
        if len(vectors) != len(batch):
            raise EmbeddingError(f"Provider returned {len(vectors)} vectors for {len(batch)} texts")
        rows.extend(vectors)

    dims = {len(v) for v in rows}
    if len(dims) != 1:
        raise EmbeddingError(f"Mixed embedding dimensions: {sorted(dims)}")
    matrix = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise EmbeddingError("Embedding contains non-finite values")
    logger.debug(f"Embedded {len(texts)} texts with {provider.name} (d={matrix.shape[1]})")
    return matrix


def build_embedding_provider(
    config: RunConfig, provider: Optional[str] = None
) -> EmbeddingProvider:
    """Provider selected by name or config."""
    kind = provider or config.embedding_provider
    if kind == "hash":
        return HashEmbeddingProvider(config.embedding_dim)
    if kind == "file":
        if config.embedding_vectors_path is None:
            raise ConfigError("embedding provider 'file' needs embedding_vectors_path")
        return VectorsFileProvider(config.embedding_vectors_path)
    if kind == "http":
        return HttpEmbeddingProvider(
            config.embedding_endpoint,
            config.embedding_model_id,
            config.api_key(),
            timeout_s=config.request_timeout_s,
        )
    raise ConfigError(f"Unknown embedding provider: {kind}")
