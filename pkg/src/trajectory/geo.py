"""Great-circle distance and a local metric projection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

LngLat = Tuple[float, float]


def haversine(a: LngLat, b: LngLat) -> float:
    """Distance in meters between two ``(lng, lat)`` points given in degrees."""

    lng1, lat1, lng2, lat2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    dlat = lat2 - lat1
    dlng = lng2 - lng1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlng / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(h), math.sqrt(max(0.0, 1.0 - h)))


def haversine_vectorized(lng1, lat1, lng2, lat2) -> np.ndarray:
    """Element-wise (broadcasting) haversine distance in meters."""

    lng1, lat1, lng2, lat2 = (np.radians(np.asarray(v, dtype=np.float64)) for v in (lng1, lat1, lng2, lat2))
    dlat = lat2 - lat1
    dlng = lng2 - lng1
    h = np.sin(dlat / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlng / 2) ** 2
    h = np.clip(h, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_M * np.arctan2(np.sqrt(h), np.sqrt(1.0 - h))


def unit_vectors(lng, lat) -> np.ndarray:
    """Points on the unit sphere; chord order equals great-circle order."""

    lng = np.radians(np.asarray(lng, dtype=np.float64))
    lat = np.radians(np.asarray(lat, dtype=np.float64))
    return np.stack([np.cos(lat) * np.cos(lng), np.cos(lat) * np.sin(lng), np.sin(lat)], axis=-1)


@dataclass(frozen=True)
class EquirectangularProjection:
    """Planar meters around a reference point; accurate at city scale."""

    lng0: float
    lat0: float

    @classmethod
    def centered_on(cls, lng: np.ndarray, lat: np.ndarray) -> "EquirectangularProjection":
        lng = np.asarray(lng, dtype=np.float64)
        lat = np.asarray(lat, dtype=np.float64)
        return cls(
            lng0=float((lng.min() + lng.max()) / 2.0),
            lat0=float((lat.min() + lat.max()) / 2.0),
        )

    def project(self, lng, lat) -> np.ndarray:
        scale = math.radians(1.0) * EARTH_RADIUS_M
        x = (np.asarray(lng, dtype=np.float64) - self.lng0) * scale * math.cos(math.radians(self.lat0))
        y = (np.asarray(lat, dtype=np.float64) - self.lat0) * scale
        return np.stack([x, y], axis=-1)


__all__ = [
    "EARTH_RADIUS_M",
    "EquirectangularProjection",
    "haversine",
    "haversine_vectorized",
    "unit_vectors",
]
