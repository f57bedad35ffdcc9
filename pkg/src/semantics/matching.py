"""Nearest-segment map matching and nearest-POI assignment.

Both searches use a KD-tree to collect candidates and then rank them by exact
distance; candidates within :data:`TIE_TOLERANCE_M` of the best distance are
treated as ties and resolved to the smallest id.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigurationError
from ..trajectory.geo import (
    EARTH_RADIUS_M,
    EquirectangularProjection,
    haversine_vectorized,
    unit_vectors,
)
from ..trajectory.types import Trajectory
from .network import PoiSet, RoadNetwork

TIE_TOLERANCE_M = 1e-6
_SEED_NEIGHBOURS = 8


def point_segment_distances(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Planar distance from each point ``[m, 2]`` to each segment ``[k, 2] -> [k, 2]``; ``[m, k]``."""

    points = np.asarray(points, dtype=np.float64)[:, None, :]
    direction = (ends - starts)[None, :, :]
    length_sq = np.sum(direction * direction, axis=-1)
    offset = points - starts[None, :, :]
    along = np.sum(offset * direction, axis=-1) / np.where(length_sq > 0, length_sq, 1.0)
    along = np.clip(np.where(length_sq > 0, along, 0.0), 0.0, 1.0)
    closest = starts[None, :, :] + along[..., None] * direction
    return np.sqrt(np.sum((points - closest) ** 2, axis=-1))


def pick_nearest(candidates: np.ndarray, distances: np.ndarray) -> int:
    """Smallest id among the candidates tied for the minimum distance."""

    best = distances.min()
    tied = candidates[distances <= best + TIE_TOLERANCE_M]
    return int(tied.min())


class SegmentIndex:
    """Edges projected to local meters, indexed by segment midpoint."""

    def __init__(self, network: RoadNetwork, projection: Optional[EquirectangularProjection] = None) -> None:
        if network.num_edges == 0:
            raise ConfigurationError("cannot map-match against an empty road network")
        self.network = network
        self.projection = projection or EquirectangularProjection.centered_on(network.node_lng, network.node_lat)
        endpoints = network.edge_endpoints()
        self.starts = self.projection.project(endpoints[:, 0, 0], endpoints[:, 0, 1])
        self.ends = self.projection.project(endpoints[:, 1, 0], endpoints[:, 1, 1])
        midpoints = (self.starts + self.ends) / 2.0
        self.max_half_length = float(np.max(np.linalg.norm(self.ends - self.starts, axis=-1)) / 2.0)
        self.tree = cKDTree(midpoints)

    @classmethod
    def for_dataset(cls, network: RoadNetwork, trajectories: Sequence[Trajectory]) -> "SegmentIndex":
        """Index whose projection is centred on the bounding box of the trajectory points."""

        if not trajectories:
            return cls(network)
        lng = np.concatenate([traj.lng for traj in trajectories])
        lat = np.concatenate([traj.lat for traj in trajectories])
        return cls(network, EquirectangularProjection.centered_on(lng, lat))

    def project(self, lng, lat) -> np.ndarray:
        return self.projection.project(lng, lat)

    def nearest(self, points: np.ndarray) -> np.ndarray:
        """Edge id for each projected point ``[m, 2]``."""

        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        count = min(_SEED_NEIGHBOURS, self.network.num_edges)
        _, seeds = self.tree.query(points, k=count)
        seeds = np.asarray(seeds).reshape(len(points), count)
        result = np.empty(len(points), dtype=np.int64)
        for row, point in enumerate(points):
            seed_dist = point_segment_distances(point[None], self.starts[seeds[row]], self.ends[seeds[row]])[0]
            # any segment closer than the best seed has its midpoint inside this radius
            radius = seed_dist.min() + self.max_half_length + TIE_TOLERANCE_M
            candidates = np.asarray(self.tree.query_ball_point(point, r=radius), dtype=np.int64)
            distances = point_segment_distances(point[None], self.starts[candidates], self.ends[candidates])[0]
            result[row] = pick_nearest(candidates, distances)
        return result


class PoiIndex:
    """POIs as unit vectors; chord length orders points like great-circle distance."""

    def __init__(self, pois: PoiSet) -> None:
        if len(pois) == 0:
            raise ConfigurationError("cannot assign POIs from an empty POI set")
        self.pois = pois
        self.tree = cKDTree(unit_vectors(pois.lng, pois.lat))

    def nearest(self, lng: np.ndarray, lat: np.ndarray) -> np.ndarray:
        lng = np.asarray(lng, dtype=np.float64).reshape(-1)
        lat = np.asarray(lat, dtype=np.float64).reshape(-1)
        queries = unit_vectors(lng, lat)
        _, seeds = self.tree.query(queries, k=1)
        result = np.empty(len(lng), dtype=np.int64)
        for row in range(len(lng)):
            seed = int(seeds[row])
            best = float(haversine_vectorized(lng[row], lat[row], self.pois.lng[seed], self.pois.lat[seed]))
            angle = (best + 2 * TIE_TOLERANCE_M) / EARTH_RADIUS_M
            radius = 2.0 * math.sin(min(angle, math.pi) / 2.0) + 1e-12
            candidates = np.asarray(self.tree.query_ball_point(queries[row], r=radius), dtype=np.int64)
            if candidates.size == 0:
                candidates = np.array([seed], dtype=np.int64)
            distances = haversine_vectorized(
                lng[row], lat[row], self.pois.lng[candidates], self.pois.lat[candidates]
            )
            result[row] = pick_nearest(candidates, distances)
        return result


def map_match(traj: Trajectory, network_or_index) -> np.ndarray:
    """Edge id per point (nearest segment, ties to the smaller id)."""

    index = network_or_index if isinstance(network_or_index, SegmentIndex) else SegmentIndex(network_or_index)
    return index.nearest(index.project(traj.lng, traj.lat))


def nearest_poi(traj: Trajectory, pois_or_index) -> np.ndarray:
    """Haversine-nearest POI id per point (ties to the smaller id)."""

    index = pois_or_index if isinstance(pois_or_index, PoiIndex) else PoiIndex(pois_or_index)
    return index.nearest(traj.lng, traj.lat)


__all__ = [
    "PoiIndex",
    "SegmentIndex",
    "TIE_TOLERANCE_M",
    "map_match",
    "nearest_poi",
    "pick_nearest",
    "point_segment_distances",
]
