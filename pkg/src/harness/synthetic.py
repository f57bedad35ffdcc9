"""Deterministic synthetic city: grid roads, block POIs and purpose-driven trips.

Nodes sit on a ``(W+1) x (H+1)`` grid with ~100 m spacing. Every fifth grid line
is an arterial, even lines are streets and the rest are alleys, each with its
own speed. Trips start next to a POI and head for a POI of a category that
depends on the origin (home to park, office to home, ...), walking the grid
with a bias towards the destination. Raw fixes are taken every 2-4 seconds so
that keeping every third fix yields 6-12 second intervals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from ..semantics.context import POIS_FILE, ROADS_FILE
from ..semantics.network import PoiSet, RoadNetwork, save_pois, save_road_network
from ..tensor.rng import Rng
from ..trajectory.geo import EARTH_RADIUS_M, haversine_vectorized
from ..trajectory.io import write_trajectories_csv
from ..trajectory.types import Trajectory

logger = logging.getLogger(__name__)

RAW_TRAJECTORIES_FILE = "trajectories_raw.csv"

ORIGIN_LNG = 104.04
ORIGIN_LAT = 30.65
GRID_SPACING_M = 100.0
COORD_DECIMALS = 6
DEPARTURE_EPOCH = 1538352000  # 2018-10-01T00:00:00Z
DEPARTURE_WINDOW_S = 30 * 24 * 3600
RAW_INTERVAL_S = (2, 4)
GPS_NOISE_M = 3.0
TOWARD_PROBABILITY = 0.8
MAX_TRIP_EDGES = 140

EDGE_SPEEDS_MPS: Dict[str, float] = {"arterial": 14.0, "street": 9.0, "alley": 5.0}
STREET_NAMES = ("Jinli", "Tianfu", "Renmin", "Shuangnan", "Qingyang", "Wuhou", "Jinjiang", "Chunxi")
POI_CATEGORIES = ("residential", "park", "mall", "office", "school", "station")
POI_NAMES: Dict[str, Tuple[str, ...]] = {
    "residential": ("Garden Court", "Riverside Homes", "Maple Apartments", "Sunrise Estate"),
    "park": ("People's Park", "Lotus Pond Park", "Bamboo Grove", "Riverside Green"),
    "mall": ("City Plaza Mall", "Golden Mall", "Harbour Shopping Centre", "Market Square"),
    "office": ("Tech Tower", "Finance Centre", "Software Park", "Trade Building"),
    "school": ("No. 7 Middle School", "Foreign Language School", "Experimental Primary", "Normal College"),
    "station": ("East Railway Station", "Metro Line 1 Station", "North Bus Terminal", "South Station"),
}
# Destination category weights given the origin category.
TRIP_PURPOSES: Dict[str, Dict[str, float]] = {
    "residential": {"park": 0.25, "mall": 0.2, "office": 0.3, "school": 0.15, "station": 0.1},
    "park": {"residential": 0.8, "mall": 0.2},
    "mall": {"residential": 0.7, "park": 0.1, "station": 0.2},
    "office": {"residential": 0.7, "mall": 0.2, "station": 0.1},
    "school": {"residential": 0.9, "park": 0.1},
    "station": {"residential": 0.5, "office": 0.3, "mall": 0.2},
}


@dataclass(frozen=True)
class SyntheticCity:
    width: int
    height: int
    network: RoadNetwork
    pois: PoiSet
    poi_category: List[str]
    edge_speed: np.ndarray  # meters per second
    edge_length: np.ndarray  # meters

    def node_index(self, col: int, row: int) -> int:
        return row * (self.width + 1) + col

    def node_grid(self, index: int) -> Tuple[int, int]:
        return index % (self.width + 1), index // (self.width + 1)

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        net = self.network
        return float(net.node_lng.min()), float(net.node_lat.min()), float(net.node_lng.max()), float(net.node_lat.max())


def _degree_steps() -> Tuple[float, float]:
    dlat = np.degrees(GRID_SPACING_M / EARTH_RADIUS_M)
    dlng = dlat / np.cos(np.radians(ORIGIN_LAT))
    return float(dlng), float(dlat)


def _line_type(index: int) -> str:
    if index % 5 == 0:
        return "arterial"
    return "street" if index % 2 == 0 else "alley"


def build_city(seed: int, width: int, height: int) -> SyntheticCity:
    """Road grid plus one POI per block; depends only on ``(seed, width, height)``."""

    rng = Rng(seed, "city")
    dlng, dlat = _degree_steps()
    cols, rows = np.meshgrid(np.arange(width + 1), np.arange(height + 1))
    node_lng = np.round(ORIGIN_LNG + cols.ravel() * dlng, COORD_DECIMALS)
    node_lat = np.round(ORIGIN_LAT + rows.ravel() * dlat, COORD_DECIMALS)
    names = rng.child("names")
    row_names = [f"{names.choice(STREET_NAMES)} Road {r}" for r in range(height + 1)]
    col_names = [f"{names.choice(STREET_NAMES)} Avenue {c}" for c in range(width + 1)]

    starts, ends, descs, speeds = [], [], [], []

    def connect(a: int, b: int, kind: str, name: str) -> None:
        for start, end in ((a, b), (b, a)):
            starts.append(start)
            ends.append(end)
            descs.append(f"{kind} {name}")
            speeds.append(EDGE_SPEEDS_MPS[kind])

    for row in range(height + 1):
        for col in range(width):
            a = row * (width + 1) + col
            connect(a, a + 1, _line_type(row), row_names[row])
    for col in range(width + 1):
        for row in range(height):
            a = row * (width + 1) + col
            connect(a, a + width + 1, _line_type(col), col_names[col])

    network = RoadNetwork(
        node_ids=np.arange((width + 1) * (height + 1), dtype=np.int64),
        node_lng=node_lng,
        node_lat=node_lat,
        edge_start=np.array(starts, dtype=np.int64),
        edge_end=np.array(ends, dtype=np.int64),
        edge_desc=descs,
    )
    edge_length = haversine_vectorized(
        node_lng[network.edge_start],
        node_lat[network.edge_start],
        node_lng[network.edge_end],
        node_lat[network.edge_end],
    )

    poi_rng = rng.child("pois")
    poi_lng, poi_lat, poi_desc, poi_category = [], [], [], []
    for row in range(height):
        for col in range(width):
            category = poi_rng.choice(POI_CATEGORIES)
            jitter = poi_rng.uniform(-0.2, 0.2, size=2)
            poi_lng.append(round(ORIGIN_LNG + (col + 0.5 + jitter[0]) * dlng, COORD_DECIMALS))
            poi_lat.append(round(ORIGIN_LAT + (row + 0.5 + jitter[1]) * dlat, COORD_DECIMALS))
            poi_desc.append(f"{category} {poi_rng.choice(POI_NAMES[category])} block {row}-{col}")
            poi_category.append(category)

    return SyntheticCity(
        width=width,
        height=height,
        network=network,
        pois=PoiSet(lng=np.array(poi_lng), lat=np.array(poi_lat), desc=poi_desc),
        poi_category=poi_category,
        edge_speed=np.array(speeds, dtype=np.float64),
        edge_length=edge_length.astype(np.float64),
    )


def _nearest_corner(city: SyntheticCity, poi: int, rng: Rng) -> int:
    # A block POI is reachable from any of its four corners.
    col, row = poi % city.width, poi // city.width
    return city.node_index(col + int(rng.integers(0, 2)), row + int(rng.integers(0, 2)))


def _edge_lookup(city: SyntheticCity) -> Dict[Tuple[int, int], int]:
    net = city.network
    return {(int(a), int(b)): edge for edge, (a, b) in enumerate(zip(net.edge_start, net.edge_end))}


def _walk(city: SyntheticCity, start: int, goal: int, rng: Rng) -> List[int]:
    """Node path from ``start`` that drifts towards ``goal``."""

    path = [start]
    previous = -1
    current = start
    while current != goal and len(path) <= MAX_TRIP_EDGES:
        col, row = city.node_grid(current)
        goal_col, goal_row = city.node_grid(goal)
        moves = [(col + dc, row + dr) for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1))]
        moves = [(c, r) for c, r in moves if 0 <= c <= city.width and 0 <= r <= city.height]
        options = [city.node_index(c, r) for c, r in moves]
        forward = [
            node
            for node, (c, r) in zip(options, moves)
            if abs(goal_col - c) + abs(goal_row - r) < abs(goal_col - col) + abs(goal_row - row)
        ]
        wander = [node for node in options if node != previous] or options
        pool = forward if forward and rng.random() < TOWARD_PROBABILITY else wander
        previous, current = current, pool[int(rng.integers(0, len(pool)))]
        path.append(current)
    return path


def simulate_trip(city: SyntheticCity, traj_id: int, seed: int, edges: Dict[Tuple[int, int], int]) -> Trajectory:
    """One journey: endpoints by purpose, a biased walk, then timed GPS fixes."""

    rng = Rng(seed, f"trip/{traj_id}")
    origin = int(rng.integers(0, len(city.poi_category)))
    weights = TRIP_PURPOSES[city.poi_category[origin]]
    purpose = rng.choice(list(weights), p=np.array(list(weights.values())) / sum(weights.values()))
    candidates = [i for i, category in enumerate(city.poi_category) if category == purpose and i != origin]
    if not candidates:
        candidates = [i for i in range(len(city.poi_category)) if i != origin] or [origin]
    destination = candidates[int(rng.integers(0, len(candidates)))]

    start = _nearest_corner(city, origin, rng)
    goal = _nearest_corner(city, destination, rng)
    if goal == start:
        col, row = city.node_grid(start)
        goal = city.node_index(col + 1 if col < city.width else col - 1, row)
    path = _walk(city, start, goal, rng)

    net = city.network
    path_edges = np.array([edges[(a, b)] for a, b in zip(path[:-1], path[1:])], dtype=np.int64)
    pace = rng.uniform(0.7, 1.1)
    durations = city.edge_length[path_edges] / (city.edge_speed[path_edges] * pace)
    node_times = np.concatenate([[0.0], np.cumsum(durations)])

    offsets = [0]
    while offsets[-1] < node_times[-1]:
        offsets.append(offsets[-1] + int(rng.integers(RAW_INTERVAL_S[0], RAW_INTERVAL_S[1] + 1)))
    elapsed = np.minimum(np.array(offsets, dtype=np.float64), node_times[-1])

    path_index = np.array(path, dtype=np.int64)
    lng = np.interp(elapsed, node_times, net.node_lng[path_index])
    lat = np.interp(elapsed, node_times, net.node_lat[path_index])
    noise = rng.normal(0.0, GPS_NOISE_M, size=(len(elapsed), 2))
    lat = lat + np.degrees(noise[:, 1] / EARTH_RADIUS_M)
    lng = lng + np.degrees(noise[:, 0] / EARTH_RADIUS_M) / np.cos(np.radians(ORIGIN_LAT))
    lng_min, lat_min, lng_max, lat_max = city.bbox
    lng = np.round(np.clip(lng, lng_min, lng_max), COORD_DECIMALS)
    lat = np.round(np.clip(lat, lat_min, lat_max), COORD_DECIMALS)

    departure = DEPARTURE_EPOCH + int(rng.integers(0, DEPARTURE_WINDOW_S))
    return Trajectory(traj_id, lng, lat, departure + np.array(offsets, dtype=np.int64))


def generate_trajectories(city: SyntheticCity, seed: int, num_traj: int) -> List[Trajectory]:
    edges = _edge_lookup(city)
    return [simulate_trip(city, traj_id, seed, edges) for traj_id in range(num_traj)]


def gen_data(seed: int, num_traj: int, width: int, height: int, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write raw trajectories, ``roads.json`` and ``pois.csv`` into ``out_dir``."""

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    city = build_city(seed, width, height)
    trajectories = generate_trajectories(city, seed, num_traj)
    lengths = np.array([len(traj) for traj in trajectories])
    logger.info(
        "Generated %d trajectories on a %dx%d grid (%d edges, %d POIs); raw points min=%d median=%d max=%d",
        num_traj,
        width,
        height,
        city.network.num_edges,
        len(city.pois),
        lengths.min(),
        int(np.median(lengths)),
        lengths.max(),
    )
    return {
        "trajectories": write_trajectories_csv(root / RAW_TRAJECTORIES_FILE, trajectories),
        "roads": save_road_network(root / ROADS_FILE, city.network),
        "pois": save_pois(root / POIS_FILE, city.pois),
    }


__all__ = [
    "POI_CATEGORIES",
    "RAW_TRAJECTORIES_FILE",
    "SyntheticCity",
    "build_city",
    "gen_data",
    "generate_trajectories",
    "simulate_trip",
]
