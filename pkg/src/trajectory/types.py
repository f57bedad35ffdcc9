"""Trajectory data model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..errors import InputError, OrderingError


class TrajectoryPoint(BaseModel):
    """One GPS sample: WGS84 degrees and integer unix seconds (UTC)."""

    lng: float = Field(..., ge=-180.0, le=180.0)
    lat: float = Field(..., ge=-90.0, le=90.0)
    t: int = Field(..., ge=0)


@dataclass(frozen=True)
class Trajectory:
    """An identified, time-ordered sequence of points stored column-wise."""

    traj_id: int
    lng: np.ndarray
    lat: np.ndarray
    t: np.ndarray

    def __post_init__(self) -> None:
        lng = np.asarray(self.lng, dtype=np.float64)
        lat = np.asarray(self.lat, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.int64)
        if not (lng.ndim == lat.ndim == t.ndim == 1) or not (len(lng) == len(lat) == len(t)):
            raise InputError(f"trajectory {self.traj_id}: lng/lat/t must be 1-D and equally long")
        if len(lng) and (np.abs(lng).max() > 180.0 or np.abs(lat).max() > 90.0):
            raise InputError(f"trajectory {self.traj_id}: coordinates out of range")
        if len(t) and t.min() < 0:
            raise InputError(f"trajectory {self.traj_id}: negative timestamp")
        object.__setattr__(self, "lng", lng)
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "t", t)

    @classmethod
    def from_points(cls, traj_id: int, points: Iterable[TrajectoryPoint]) -> "Trajectory":
        points = list(points)
        return cls(
            traj_id=int(traj_id),
            lng=np.array([p.lng for p in points], dtype=np.float64),
            lat=np.array([p.lat for p in points], dtype=np.float64),
            t=np.array([p.t for p in points], dtype=np.int64),
        )

    @property
    def points(self) -> List[TrajectoryPoint]:
        return [
            TrajectoryPoint(lng=float(x), lat=float(y), t=int(s))
            for x, y, s in zip(self.lng, self.lat, self.t)
        ]

    @property
    def coords(self) -> np.ndarray:
        """``[n, 2]`` array of ``(lng, lat)``."""

        return np.stack([self.lng, self.lat], axis=-1)

    @property
    def departure_time(self) -> int:
        return int(self.t[0])

    @property
    def duration_seconds(self) -> int:
        return int(self.t[-1] - self.t[0])

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def ensure_ordered(self) -> None:
        """Raise :class:`OrderingError` unless timestamps strictly increase."""

        steps = np.diff(self.t)
        if steps.size and steps.min() <= 0:
            position = int(np.argmax(steps <= 0)) + 1
            raise OrderingError(
                f"trajectory {self.traj_id}: timestamp at index {position} does not increase"
            )

    def take(self, indices: Sequence[int]) -> "Trajectory":
        index = np.asarray(indices, dtype=np.int64)
        return Trajectory(self.traj_id, self.lng[index], self.lat[index], self.t[index])

    def prefix(self, length: int) -> "Trajectory":
        return Trajectory(self.traj_id, self.lng[:length], self.lat[:length], self.t[:length])


__all__ = ["Trajectory", "TrajectoryPoint"]
