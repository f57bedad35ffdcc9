"""Road network and POI data, with their on-disk formats.

``roads.json``::

    {"nodes": [{"id", "lng", "lat"}], "edges": [{"id", "start", "end", "desc"}]}

``pois.csv`` has the header ``poi_id,lng,lat,desc``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, FormatError, ParseError
from ..utils.filesystem import atomic_write, write_json

logger = logging.getLogger(__name__)

POI_COLUMNS = ["poi_id", "lng", "lat", "desc"]


@dataclass(frozen=True)
class RoadNetwork:
    """Directed graph; node coordinates in degrees, edges dense ``0..|E|-1``."""

    node_ids: np.ndarray
    node_lng: np.ndarray
    node_lat: np.ndarray
    edge_start: np.ndarray  # row index into the node arrays
    edge_end: np.ndarray
    edge_desc: List[str]

    def __post_init__(self) -> None:
        if len(self.edge_start) != len(self.edge_end) or len(self.edge_start) != len(self.edge_desc):
            raise FormatError("edge arrays must have equal length")
        if len(self.edge_start) and (
            min(self.edge_start.min(), self.edge_end.min()) < 0
            or max(self.edge_start.max(), self.edge_end.max()) >= len(self.node_ids)
        ):
            raise FormatError("edges reference missing nodes")

    @property
    def num_edges(self) -> int:
        return len(self.edge_desc)

    @property
    def num_nodes(self) -> int:
        return int(self.node_ids.shape[0])

    def edge_endpoints(self) -> np.ndarray:
        """``[|E|, 2, 2]``: ``(start, end) x (lng, lat)`` in degrees."""

        start = np.stack([self.node_lng[self.edge_start], self.node_lat[self.edge_start]], axis=-1)
        end = np.stack([self.node_lng[self.edge_end], self.node_lat[self.edge_end]], axis=-1)
        return np.stack([start, end], axis=1)

    @classmethod
    def from_records(cls, nodes: list, edges: list) -> "RoadNetwork":
        try:
            node_ids = np.array([int(node["id"]) for node in nodes], dtype=np.int64)
            node_lng = np.array([float(node["lng"]) for node in nodes], dtype=np.float64)
            node_lat = np.array([float(node["lat"]) for node in nodes], dtype=np.float64)
            edge_ids = [int(edge["id"]) for edge in edges]
            starts = [int(edge["start"]) for edge in edges]
            ends = [int(edge["end"]) for edge in edges]
            descs = [str(edge["desc"]) for edge in edges]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed road record: {exc}") from exc
        if len(set(node_ids.tolist())) != len(node_ids):
            raise FormatError("duplicate node ids")
        order = np.argsort(edge_ids, kind="stable")
        if [edge_ids[i] for i in order] != list(range(len(edge_ids))):
            raise FormatError("edge ids must be dense 0..|E|-1")
        position = {node_id: row for row, node_id in enumerate(node_ids.tolist())}
        missing = [node for node in starts + ends if node not in position]
        if missing:
            raise FormatError(f"edge references unknown node {missing[0]}")
        return cls(
            node_ids=node_ids,
            node_lng=node_lng,
            node_lat=node_lat,
            edge_start=np.array([position[starts[i]] for i in order], dtype=np.int64),
            edge_end=np.array([position[ends[i]] for i in order], dtype=np.int64),
            edge_desc=[descs[i] for i in order],
        )

    def to_records(self) -> dict:
        return {
            "nodes": [
                {"id": int(node_id), "lng": round(float(lng), 7), "lat": round(float(lat), 7)}
                for node_id, lng, lat in zip(self.node_ids, self.node_lng, self.node_lat)
            ],
            "edges": [
                {
                    "id": edge_id,
                    "start": int(self.node_ids[start]),
                    "end": int(self.node_ids[end]),
                    "desc": desc,
                }
                for edge_id, (start, end, desc) in enumerate(
                    zip(self.edge_start, self.edge_end, self.edge_desc)
                )
            ],
        }


@dataclass(frozen=True)
class PoiSet:
    lng: np.ndarray
    lat: np.ndarray
    desc: List[str]

    def __post_init__(self) -> None:
        if not (len(self.lng) == len(self.lat) == len(self.desc)):
            raise FormatError("POI arrays must have equal length")

    def __len__(self) -> int:
        return len(self.desc)


def load_road_network(path: Union[str, Path]) -> RoadNetwork:
    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"road network file not found: {source}")
    try:
        with open(source, "r", encoding="utf-8") as file_obj:
            document = json.load(file_obj)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: invalid JSON ({exc.msg})", line=exc.lineno) from exc
    if not isinstance(document, dict) or "nodes" not in document or "edges" not in document:
        raise FormatError(f"{source}: expected an object with 'nodes' and 'edges'")
    network = RoadNetwork.from_records(document["nodes"], document["edges"])
    logger.debug("Loaded %d nodes / %d edges from %s", network.num_nodes, network.num_edges, source)
    return network


def save_road_network(path: Union[str, Path], network: RoadNetwork) -> Path:
    write_json(path, network.to_records())
    return Path(path)


def load_pois(path: Union[str, Path]) -> PoiSet:
    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"POI file not found: {source}")
    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    if list(frame.columns) != POI_COLUMNS:
        raise ParseError(f"header must be {','.join(POI_COLUMNS)}", line=1)
    poi_id = pd.to_numeric(frame["poi_id"], errors="coerce").to_numpy(dtype=np.float64)
    lng = pd.to_numeric(frame["lng"], errors="coerce").to_numpy(dtype=np.float64)
    lat = pd.to_numeric(frame["lat"], errors="coerce").to_numpy(dtype=np.float64)
    bad = ~(np.isfinite(poi_id) & np.isfinite(lng) & np.isfinite(lat))
    if bad.any():
        raise ParseError("invalid POI row", line=int(np.argmax(bad)) + 2)
    if not np.array_equal(poi_id, np.arange(len(frame), dtype=np.float64)):
        raise FormatError(f"{source}: POI ids must be dense 0..|P|-1 in file order")
    return PoiSet(lng=lng, lat=lat, desc=frame["desc"].astype(str).tolist())


def save_pois(path: Union[str, Path], pois: PoiSet) -> Path:
    frame = pd.DataFrame(
        {"poi_id": np.arange(len(pois)), "lng": pois.lng, "lat": pois.lat, "desc": pois.desc}
    )
    with atomic_write(path) as file_obj:
        frame.to_csv(file_obj, index=False, float_format="%.7f", lineterminator="\n")
    return Path(path)


__all__ = [
    "POI_COLUMNS",
    "PoiSet",
    "RoadNetwork",
    "load_pois",
    "load_road_network",
    "save_pois",
    "save_road_network",
]
