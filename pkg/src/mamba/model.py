"""Stacked encoder producing one embedding per trajectory."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import ConfigurationError
from ..tensor import functional as F
from ..tensor.autograd import Tensor, no_grad
from ..tensor.nn import Module
from ..tensor.rng import Rng
from ..trajectory.embedding import PaddedBatch, PointEmbedder, pad_batch, prepare_trajectory
from ..trajectory.scaler import FeatureScaler
from ..trajectory.types import Trajectory
from .block import TrajMambaBlock


@dataclass(frozen=True)
class ModelDims:
    embed_dim: int = 64  # E
    inner_dim: int = 64  # D
    state_dim: int = 16  # N
    num_heads: int = 4  # H
    num_layers: int = 2  # L
    num_freqs: int = 16  # F
    chunk_size: int = 32
    use_mb: bool = True

    def __post_init__(self) -> None:
        if self.num_layers < 1:
            raise ConfigurationError("the encoder needs at least one layer")
        if self.inner_dim % self.num_heads:
            raise ConfigurationError(
                f"inner_dim {self.inner_dim} must be divisible by num_heads {self.num_heads}"
            )
        if min(self.embed_dim, self.state_dim, self.num_freqs, self.chunk_size) < 1:
            raise ConfigurationError("model dimensions must be positive")

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


class TrajMambaModel(Module):
    """Point embedder followed by ``L`` blocks and masked mean pooling."""

    _list_names = {"blocks": "block"}

    def __init__(self, dims: ModelDims, rng: Rng) -> None:
        self.dims = dims
        self.embedder = PointEmbedder(dims.embed_dim, dims.num_freqs, rng.child("embedder"))
        self.blocks: List[TrajMambaBlock] = [
            TrajMambaBlock(
                dims.embed_dim,
                dims.inner_dim,
                dims.state_dim,
                dims.num_heads,
                rng.child(f"block{layer}"),
                use_mb=dims.use_mb,
                chunk_size=dims.chunk_size,
            )
            for layer in range(dims.num_layers)
        ]
        self.assign_names()

    def sequence_outputs(self, batch: PaddedBatch) -> Tensor:
        """Final-layer rows ``[B, n, E]``; the movement features feed every block."""

        z = self.embedder(batch.coords, batch.temporal)
        for block in self.blocks:
            z = block(z, batch.movement)
        return z

    def forward_batch(self, batch: PaddedBatch) -> Tensor:
        return F.masked_mean(self.sequence_outputs(batch), batch.mask)

    def __call__(self, batch: PaddedBatch) -> Tensor:
        return self.forward_batch(batch)


def encode(traj: Trajectory, model: TrajMambaModel, scaler: Optional[FeatureScaler]) -> Tensor:
    """Embedding ``[E]`` of a single trajectory."""

    pooled = model.forward_batch(pad_batch([prepare_trajectory(traj, scaler)]))
    return pooled[0]


def encode_many(
    trajectories: Sequence[Trajectory],
    model: TrajMambaModel,
    scaler: Optional[FeatureScaler],
    batch_size: int = 64,
) -> np.ndarray:
    """``[K, E]`` embeddings computed without recording gradients."""

    rows = []
    with no_grad():
        for start in range(0, len(trajectories), batch_size):
            prepared = [prepare_trajectory(traj, scaler) for traj in trajectories[start : start + batch_size]]
            rows.append(model.forward_batch(pad_batch(prepared)).data)
    if not rows:
        return np.zeros((0, model.dims.embed_dim), dtype=np.float64)
    return np.concatenate(rows, axis=0)


__all__ = ["ModelDims", "TrajMambaModel", "encode", "encode_many"]
