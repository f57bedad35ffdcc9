"""Text-embedding providers for road and POI descriptions.

Three sources share one interface: a deterministic hash stub (default, offline),
a file-backed table in checkpoint format (``text:<key>`` entries), and a remote
JSON-over-HTTP service whose answers are cached into such a table.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import requests

from ..errors import ConfigurationError, EmbeddingLookupError, EmbeddingServiceError, FormatError
from ..tensor.checkpoint import load_tensors, save_tensors
from ..tensor.rng import Rng

logger = logging.getLogger(__name__)

HASH_DIM = 64
TEXT_PREFIX = "text:"
HTTP_TIMEOUT = 30.0
MAX_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.5


class TextEmbeddingProvider(ABC):
    """Maps ``(key, text)`` to a fixed-length vector."""

    dim: int

    @abstractmethod
    def embed(self, key: str, text: str) -> np.ndarray:
        """Vector ``[dim]`` for one description."""

    def embed_many(self, items: Sequence[Tuple[str, str]]) -> np.ndarray:
        if not items:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([self.embed(key, text) for key, text in items])


class HashTextProvider(TextEmbeddingProvider):
    """Unit vectors seeded from the sha256 of the text bytes."""

    def __init__(self, dim: int = HASH_DIM) -> None:
        if dim < 1:
            raise ConfigurationError("text embedding dim must be positive")
        self.dim = dim

    def embed(self, key: str, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        vector = Rng(int.from_bytes(digest[:8], "little"), "text-hash").normal(size=self.dim)
        return vector / np.linalg.norm(vector)


def save_text_table(path: Union[str, Path], vectors: Mapping[str, np.ndarray]) -> Path:
    tensors = {}
    for key, value in vectors.items():
        array = np.asarray(value)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(np.float32)
        tensors[f"{TEXT_PREFIX}{key}"] = array
    return save_tensors(path, tensors, metadata={"kind": "text-embeddings"})


class FileTextProvider(TextEmbeddingProvider):
    """Exact key lookup in a stored table; every vector must share one dim."""

    def __init__(self, path: Union[str, Path]) -> None:
        self.path = Path(path)
        tensors, _ = load_tensors(self.path)
        self.table: Dict[str, np.ndarray] = {
            name[len(TEXT_PREFIX) :]: value for name, value in tensors.items() if name.startswith(TEXT_PREFIX)
        }
        dims = {value.shape for value in self.table.values()}
        if len(dims) > 1 or any(len(shape) != 1 for shape in dims):
            raise FormatError(f"{self.path}: text vectors must all be 1-D with one length, got {sorted(dims)}")
        self.dim = next(iter(dims))[0] if dims else 0

    def embed(self, key: str, text: str) -> np.ndarray:
        try:
            return self.table[key]
        except KeyError as exc:
            raise EmbeddingLookupError(f"no text embedding stored for key {key!r} in {self.path}") from exc


class RemoteTextProvider(TextEmbeddingProvider):
    """Client for ``POST {"input": [texts]} -> {"data": [{"embedding": [...]}]}`` with a local cache."""

    def __init__(
        self,
        url: str,
        cache_path: Union[str, Path],
        token: Optional[str] = None,
        dim: Optional[int] = None,
        session: Optional[requests.Session] = None,
    ) -> None:
        self.url = url
        self.token = token
        self.cache_path = Path(cache_path)
        self.session = session or requests.Session()
        self._lock = threading.Lock()
        self._cache: Dict[str, np.ndarray] = {}
        if (self.cache_path / "manifest.json").exists():
            self._cache = dict(FileTextProvider(self.cache_path).table)
        cached_dims = {value.shape[0] for value in self._cache.values()}
        self.dim = dim or (next(iter(cached_dims)) if cached_dims else 0)

    def _request(self, texts: List[str]) -> List[np.ndarray]:
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        last_error: Optional[Exception] = None
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                response = self.session.post(
                    self.url, json={"input": texts}, headers=headers, timeout=HTTP_TIMEOUT
                )
                response.raise_for_status()
                data = response.json()["data"]
                return [np.asarray(item["embedding"], dtype=np.float64) for item in data]
            except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
                last_error = exc
                logger.warning("Embedding request failed (attempt %d/%d): %s", attempt, MAX_ATTEMPTS, exc)
                if attempt < MAX_ATTEMPTS:
                    time.sleep(RETRY_BACKOFF_S * attempt)
        raise EmbeddingServiceError(f"embedding service {self.url} failed: {last_error}")

    def embed_many(self, items: Sequence[Tuple[str, str]]) -> np.ndarray:
        with self._lock:
            missing = [(key, text) for key, text in items if key not in self._cache]
            if missing:
                vectors = self._request([text for _, text in missing])
                if len(vectors) != len(missing):
                    raise FormatError(f"embedding service returned {len(vectors)} vectors for {len(missing)} texts")
                for (key, _), vector in zip(missing, vectors):
                    if self.dim and vector.shape != (self.dim,):
                        raise FormatError(f"embedding for {key!r} has dim {vector.shape}, expected {self.dim}")
                    self.dim = self.dim or int(vector.shape[0])
                    self._cache[key] = vector
                save_text_table(self.cache_path, self._cache)
            return np.stack([self._cache[key] for key, _ in items]) if items else np.zeros((0, self.dim))

    def embed(self, key: str, text: str) -> np.ndarray:
        return self.embed_many([(key, text)])[0]


def build_provider(
    kind: str,
    dim: int = HASH_DIM,
    table_path: Optional[Union[str, Path]] = None,
    url: Optional[str] = None,
    token: Optional[str] = None,
) -> TextEmbeddingProvider:
    if kind == "hash":
        return HashTextProvider(dim)
    if kind == "file":
        if table_path is None:
            raise ConfigurationError("text_provider 'file' needs text_table_path")
        return FileTextProvider(table_path)
    if kind == "remote":
        if not url:
            raise ConfigurationError("text_provider 'remote' needs TRAJMAMBA_EMBEDDINGS_URL")
        if table_path is None:
            raise ConfigurationError("text_provider 'remote' needs text_table_path for its cache")
        return RemoteTextProvider(url, table_path, token=token)
    raise ConfigurationError(f"unknown text provider {kind!r}")


def text_embed(provider: TextEmbeddingProvider, key: str, text: str) -> np.ndarray:
    return provider.embed(key, text)


__all__ = [
    "FileTextProvider",
    "HashTextProvider",
    "RemoteTextProvider",
    "TextEmbeddingProvider",
    "build_provider",
    "save_text_table",
    "text_embed",
]
