"""Temporal and kinematic feature extraction for trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import InputError, OrderingError
from .geo import haversine_vectorized
from .types import Trajectory

TEMPORAL_FEATURES = ("day_of_week", "hour", "minute", "delta_minutes")
MOVEMENT_FEATURES = ("v", "acc", "theta")


@dataclass(frozen=True)
class TemporalFeatures:
    day_of_week: int  # Monday == 0
    hour: int
    minute: int
    delta_minutes: float

    def as_tuple(self):
        return (self.day_of_week, self.hour, self.minute, self.delta_minutes)


def calendar_columns(t: np.ndarray, t1: int) -> np.ndarray:
    """``[n, 4]`` UTC weekday (Monday == 0), hour, minute and minutes elapsed since ``t1``."""

    t = np.asarray(t, dtype=np.int64).reshape(-1)
    if t.size and t.min() < t1:
        raise OrderingError(f"timestamp {int(t.min())} precedes trajectory start {t1}")
    stamps = pd.to_datetime(t, unit="s", utc=True)
    return np.stack(
        [
            np.asarray(stamps.dayofweek, dtype=np.float64),
            np.asarray(stamps.hour, dtype=np.float64),
            np.asarray(stamps.minute, dtype=np.float64),
            (t - int(t1)).astype(np.float64) / 60.0,
        ],
        axis=-1,
    )


def temporal_features(t: int, t1: int) -> TemporalFeatures:
    """Calendar decomposition of one timestamp."""

    day, hour, minute, delta = calendar_columns(np.array([t]), t1)[0]
    return TemporalFeatures(day_of_week=int(day), hour=int(hour), minute=int(minute), delta_minutes=float(delta))


def temporal_matrix(traj: Trajectory) -> np.ndarray:
    """``[n, 4]`` float matrix of :data:`TEMPORAL_FEATURES` for every point."""

    if len(traj) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    try:
        return calendar_columns(traj.t, int(traj.t[0]))
    except OrderingError as exc:
        raise OrderingError(f"trajectory {traj.traj_id}: {exc}") from exc


@dataclass(frozen=True)
class MovementFeatures:
    """Unnormalized speed (m/s), acceleration (m/s²) and bearing (radians)."""

    v: np.ndarray
    acc: np.ndarray
    theta: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.stack([self.v, self.acc, self.theta], axis=-1)

    def __len__(self) -> int:
        return int(self.v.shape[0])


def bearings(lng: np.ndarray, lat: np.ndarray) -> np.ndarray:
    """Clockwise-from-north bearing of each step ``i-1 -> i`` (length ``n - 1``).

    Zero-length steps keep the previous bearing (0 before any movement).
    """

    phi = np.radians(lat)
    dlam = np.radians(np.diff(lng))
    left = np.sin(dlam) * np.cos(phi[1:])
    right = np.cos(phi[:-1]) * np.sin(phi[1:]) - np.sin(phi[:-1]) * np.cos(phi[1:]) * np.cos(dlam)
    theta = np.arctan2(left, right)
    still = (left == 0.0) & (right == 0.0)
    if still.any():
        previous = 0.0
        for index in range(theta.shape[0]):
            if still[index]:
                theta[index] = previous
            previous = theta[index]
    return theta


def movement_features(traj: Trajectory) -> MovementFeatures:
    """Per-point kinematics; the first row repeats the second."""

    if len(traj) < 2:
        raise InputError(f"trajectory {traj.traj_id}: movement features need at least 2 points")
    traj.ensure_ordered()
    dt = np.diff(traj.t).astype(np.float64)
    distance = haversine_vectorized(traj.lng[:-1], traj.lat[:-1], traj.lng[1:], traj.lat[1:])
    v = np.empty(len(traj), dtype=np.float64)
    v[1:] = distance / dt
    v[0] = v[1]
    acc = np.empty_like(v)
    acc[1:] = np.diff(v) / dt
    acc[0] = acc[1]
    theta = np.empty_like(v)
    theta[1:] = bearings(traj.lng, traj.lat)
    theta[0] = theta[1]
    return MovementFeatures(v=v, acc=acc, theta=theta)


__all__ = [
    "MOVEMENT_FEATURES",
    "MovementFeatures",
    "TEMPORAL_FEATURES",
    "TemporalFeatures",
    "bearings",
    "calendar_columns",
    "movement_features",
    "temporal_features",
    "temporal_matrix",
]
