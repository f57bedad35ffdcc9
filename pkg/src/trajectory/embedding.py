"""Point embedding: a spatial linear term plus Fourier-coded time features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from ..errors import InputError
from ..tensor.autograd import Tensor, as_tensor, concat, get_default_dtype
from ..tensor.nn import FourierEncoding, Linear, Module
from ..tensor.rng import Rng
from .features import movement_features, temporal_matrix
from .scaler import FeatureScaler
from .types import Trajectory


class PointEmbedder(Module):
    """``z_i = Linear(lng, lat) + Linear([Fourier(day), Fourier(hour), Fourier(minute), Fourier(delta)])``."""

    def __init__(self, embed_dim: int, num_freqs: int, rng: Rng) -> None:
        self.spatial = Linear(2, embed_dim, rng.child("spatial"))
        self.day_fourier = FourierEncoding(num_freqs, rng.child("day_fourier"))
        self.hour_fourier = FourierEncoding(num_freqs, rng.child("hour_fourier"))
        self.minute_fourier = FourierEncoding(num_freqs, rng.child("minute_fourier"))
        self.delta_fourier = FourierEncoding(num_freqs, rng.child("delta_fourier"))
        self.temporal = Linear(8 * num_freqs, embed_dim, rng.child("temporal"))

    def __call__(self, coords: Union[np.ndarray, Tensor], temporal: np.ndarray) -> Tensor:
        """``coords [..., 2]`` and ``temporal [..., 4]`` to ``[..., E]``; tensor coords stay on the tape."""

        dtype = get_default_dtype()
        if not isinstance(coords, Tensor):
            coords = as_tensor(np.asarray(coords, dtype=dtype))
        temporal = np.asarray(temporal, dtype=dtype)
        encoders = (self.day_fourier, self.hour_fourier, self.minute_fourier, self.delta_fourier)
        codes = [
            encoder(as_tensor(temporal[..., index : index + 1]))
            for index, encoder in enumerate(encoders)
        ]
        return self.spatial(coords) + self.temporal(concat(codes, axis=-1))


@dataclass(frozen=True)
class PreparedTrajectory:
    """Model-ready arrays for one trajectory."""

    traj_id: int
    coords: np.ndarray  # [n, 2], scaled when a scaler is given
    temporal: np.ndarray  # [n, 4]
    movement: np.ndarray  # [n, 3], scaled when a scaler is given

    def __len__(self) -> int:
        return int(self.coords.shape[0])


def prepare_trajectory(traj: Trajectory, scaler: Optional[FeatureScaler] = None) -> PreparedTrajectory:
    if len(traj) < 2:
        raise InputError(f"trajectory {traj.traj_id} has {len(traj)} point(s); at least 2 are required")
    movement = movement_features(traj).as_matrix()
    coords = traj.coords
    if scaler is not None:
        coords = scaler.transform_coords(coords)
        movement = scaler.transform_movement(movement)
    return PreparedTrajectory(traj.traj_id, coords, temporal_matrix(traj), movement)


@dataclass(frozen=True)
class PaddedBatch:
    """Right-padded ``[B, n_max, ...]`` arrays plus a ``[B, n_max]`` validity mask."""

    traj_ids: List[int]
    coords: np.ndarray
    temporal: np.ndarray
    movement: np.ndarray
    mask: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1)


def pad_batch(items: Sequence[PreparedTrajectory]) -> PaddedBatch:
    if not items:
        raise InputError("cannot batch zero trajectories")
    longest = max(len(item) for item in items)
    batch = len(items)
    coords = np.zeros((batch, longest, 2), dtype=np.float64)
    temporal = np.zeros((batch, longest, 4), dtype=np.float64)
    movement = np.zeros((batch, longest, 3), dtype=np.float64)
    mask = np.zeros((batch, longest), dtype=bool)
    for row, item in enumerate(items):
        n = len(item)
        coords[row, :n] = item.coords
        temporal[row, :n] = item.temporal
        movement[row, :n] = item.movement
        mask[row, :n] = True
    return PaddedBatch([item.traj_id for item in items], coords, temporal, movement, mask)


def embed_points(traj: Trajectory, embedder: PointEmbedder, scaler: Optional[FeatureScaler] = None) -> Tensor:
    """``[n, E]`` latent point vectors for one trajectory."""

    coords = traj.coords if scaler is None else scaler.transform_coords(traj.coords)
    return embedder(coords, temporal_matrix(traj))


__all__ = [
    "PaddedBatch",
    "PointEmbedder",
    "PreparedTrajectory",
    "embed_points",
    "pad_batch",
    "prepare_trajectory",
]
