"""Dataset-level min-max normalization fitted on the training split."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Sequence

import numpy as np

from ..errors import DimensionError, FitError, FormatError
from .features import movement_features
from .types import Trajectory

SCALER_FEATURES = ("lng", "lat", "v", "acc", "theta")


@dataclass(frozen=True)
class FeatureScaler:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self) -> None:
        minimum = np.asarray(self.minimum, dtype=np.float64)
        maximum = np.asarray(self.maximum, dtype=np.float64)
        if minimum.shape != maximum.shape or minimum.ndim != 1:
            raise DimensionError("scaler min/max must be 1-D arrays of equal length")
        if np.any(maximum < minimum):
            raise FitError("scaler max must be >= min for every feature")
        object.__setattr__(self, "minimum", minimum)
        object.__setattr__(self, "maximum", maximum)

    @property
    def num_features(self) -> int:
        return int(self.minimum.shape[0])

    def transform(self, features: np.ndarray, columns: slice = slice(None)) -> np.ndarray:
        return apply_scaler(self, features, columns)

    def transform_coords(self, coords: np.ndarray) -> np.ndarray:
        return apply_scaler(self, coords, slice(0, 2))

    def transform_movement(self, movement: np.ndarray) -> np.ndarray:
        return apply_scaler(self, movement, slice(2, 5))

    def inverse_coords(self, scaled: np.ndarray) -> np.ndarray:
        """Map normalized ``(lng, lat)`` back to degrees (no clamping)."""

        low, high = self.minimum[:2], self.maximum[:2]
        return low + np.asarray(scaled, dtype=np.float64) * (high - low)

    def to_tensors(self, prefix: str = "scaler.") -> Dict[str, np.ndarray]:
        # always f64, whatever the model precision
        return {
            f"{prefix}min": self.minimum.astype(np.float64),
            f"{prefix}max": self.maximum.astype(np.float64),
        }

    @classmethod
    def from_tensors(cls, tensors: Mapping[str, np.ndarray], prefix: str = "scaler.") -> "FeatureScaler":
        try:
            return cls(tensors[f"{prefix}min"], tensors[f"{prefix}max"])
        except KeyError as exc:
            raise FormatError(f"checkpoint has no {prefix}min/{prefix}max tensors") from exc


def fit_scaler(train_features: np.ndarray) -> FeatureScaler:
    """Fit per-column min/max over the rows of ``train_features``."""

    matrix = np.asarray(train_features, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise FitError("cannot fit a scaler on an empty training set")
    return FeatureScaler(matrix.min(axis=0), matrix.max(axis=0))


def apply_scaler(scaler: FeatureScaler, features: np.ndarray, columns: slice = slice(None)) -> np.ndarray:
    """``(x - min) / (max - min)`` clamped to ``[0, 1]``; constant features map to 0.5."""

    low = scaler.minimum[columns]
    high = scaler.maximum[columns]
    values = np.asarray(features, dtype=np.float64)
    if values.shape[-1] != low.shape[0]:
        raise DimensionError(
            f"scaler covers {low.shape[0]} features, input has {values.shape[-1]}"
        )
    span = high - low
    degenerate = span <= 0
    scaled = (values - low) / np.where(degenerate, 1.0, span)
    scaled = np.clip(scaled, 0.0, 1.0)
    return np.where(degenerate, 0.5, scaled)


def feature_rows(trajectories: Iterable[Trajectory]) -> np.ndarray:
    """Stack ``(lng, lat, v, acc, theta)`` rows of every point."""

    blocks = []
    for traj in trajectories:
        movement = movement_features(traj).as_matrix()
        blocks.append(np.concatenate([traj.coords, movement], axis=-1))
    if not blocks:
        return np.zeros((0, len(SCALER_FEATURES)), dtype=np.float64)
    return np.concatenate(blocks, axis=0)


def fit_trajectory_scaler(trajectories: Sequence[Trajectory]) -> FeatureScaler:
    return fit_scaler(feature_rows(trajectories))


__all__ = [
    "FeatureScaler",
    "SCALER_FEATURES",
    "apply_scaler",
    "feature_rows",
    "fit_scaler",
    "fit_trajectory_scaler",
]
