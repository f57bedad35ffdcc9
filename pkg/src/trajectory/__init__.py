"""Trajectory data model, feature extraction and point embedding."""

from .features import MovementFeatures, TemporalFeatures, movement_features, temporal_features
from .geo import haversine, haversine_vectorized
from .scaler import FeatureScaler, apply_scaler, fit_scaler
from .types import Trajectory, TrajectoryPoint

__all__ = [
    "FeatureScaler",
    "MovementFeatures",
    "TemporalFeatures",
    "Trajectory",
    "TrajectoryPoint",
    "apply_scaler",
    "fit_scaler",
    "haversine",
    "haversine_vectorized",
    "movement_features",
    "temporal_features",
]
