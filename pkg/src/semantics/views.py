"""Transformer view encoders over matched road segments or nearest POIs."""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from ..errors import EntityIndexError, InputError
from ..tensor import functional as F
from ..tensor.autograd import Tensor, get_default_dtype
from ..tensor.nn import Embedding, LayerNorm, Linear, Module, TransformerEncoderLayer
from ..tensor.rng import Rng
from .text import TextEmbeddingProvider

VIEW_LAYERS = 2


class ViewEncoder(Module):
    """Entity embedding, sinusoidal positions, two encoder layers, masked mean pooling.

    The text vectors of the entity descriptions are computed once from the
    provider and kept frozen; only the projections and tables train.
    """

    _list_names = {"layers": "layer"}

    def __init__(
        self,
        text_vectors: np.ndarray,
        embed_dim: int,
        num_heads: int,
        rng: Rng,
        num_layers: int = VIEW_LAYERS,
    ) -> None:
        text_vectors = np.asarray(text_vectors, dtype=get_default_dtype())
        if text_vectors.ndim != 2 or text_vectors.shape[0] == 0:
            raise InputError("view encoder needs a non-empty [count, dim] text table")
        self._text_vectors = text_vectors
        self.table = Embedding(text_vectors.shape[0], embed_dim, rng.child("table"))
        self.index_proj = Linear(embed_dim, embed_dim, rng.child("index_proj"))
        self.text_proj = Linear(text_vectors.shape[1], embed_dim, rng.child("text_proj"))
        self.layers: List[TransformerEncoderLayer] = [
            TransformerEncoderLayer(embed_dim, num_heads, rng.child(f"layer{index}"))
            for index in range(num_layers)
        ]
        self.final_norm = LayerNorm(embed_dim)

    @classmethod
    def for_entities(
        cls,
        keys: Sequence[str],
        descs: Sequence[str],
        provider: TextEmbeddingProvider,
        embed_dim: int,
        num_heads: int,
        rng: Rng,
    ) -> "ViewEncoder":
        vectors = provider.embed_many(list(zip(keys, descs)))
        return cls(vectors, embed_dim, num_heads, rng)

    @property
    def num_entities(self) -> int:
        return int(self._text_vectors.shape[0])

    @property
    def embed_dim(self) -> int:
        return int(self.table.table.shape[1])

    def entity_embedding(self, ids: np.ndarray) -> Tensor:
        """``Linear(IndexEmbed(id)) + Linear(TextEmbed(desc))`` for every id."""

        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.num_entities):
            raise EntityIndexError(f"entity id out of range [0, {self.num_entities})")
        text = Tensor(self._text_vectors[ids])
        return self.index_proj(self.table(ids)) + self.text_proj(text)

    def __call__(self, ids: np.ndarray, mask: Optional[np.ndarray] = None) -> Tensor:
        """``ids [B, n]`` (right-padded) to views ``[B, E]``."""

        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 2 or ids.shape[1] == 0:
            raise InputError(f"view encoder expects ids of shape [B, n>=1], got {ids.shape}")
        if mask is None:
            mask = np.ones(ids.shape, dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        positions = F.sinusoidal_positions(ids.shape[1], self.embed_dim, dtype=get_default_dtype())
        hidden = self.entity_embedding(np.where(mask, ids, 0)) + positions
        for layer in self.layers:
            hidden = layer(hidden, key_mask=mask)
        return F.masked_mean(self.final_norm(hidden), mask)


def pad_ids(sequences: Sequence[np.ndarray]):
    """Right-pad id sequences with 0; returns ``(ids, mask)``."""

    if not sequences:
        raise InputError("cannot batch zero id sequences")
    longest = max(len(seq) for seq in sequences)
    ids = np.zeros((len(sequences), longest), dtype=np.int64)
    mask = np.zeros((len(sequences), longest), dtype=bool)
    for row, seq in enumerate(sequences):
        ids[row, : len(seq)] = seq
        mask[row, : len(seq)] = True
    return ids, mask


def entity_embedding(ids: np.ndarray, encoder: ViewEncoder) -> Tensor:
    return encoder.entity_embedding(ids)


def road_view(edge_ids: np.ndarray, encoder: ViewEncoder) -> Tensor:
    """View ``[E]`` of one matched edge sequence."""

    return encoder(np.asarray(edge_ids, dtype=np.int64)[None, :])[0]


def poi_view(poi_ids: np.ndarray, encoder: ViewEncoder) -> Tensor:
    return encoder(np.asarray(poi_ids, dtype=np.int64)[None, :])[0]


def entity_keys(prefix: str, count: int) -> List[str]:
    return [f"{prefix}:{index}" for index in range(count)]


__all__ = [
    "ViewEncoder",
    "entity_embedding",
    "entity_keys",
    "pad_ids",
    "poi_view",
    "road_view",
]
