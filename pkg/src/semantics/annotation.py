"""Per-trajectory semantic annotations and their CSV file (``traj_id,edge_ids,poi_ids``)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Union

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, FormatError, ParseError, TrajMambaError
from ..trajectory.types import Trajectory
from ..utils.filesystem import atomic_write
from .matching import PoiIndex, SegmentIndex

logger = logging.getLogger(__name__)

ANNOTATION_COLUMNS = ["traj_id", "edge_ids", "poi_ids"]


@dataclass(frozen=True)
class SemanticAnnotation:
    traj_id: int
    edge_ids: np.ndarray
    poi_ids: np.ndarray

    def __post_init__(self) -> None:
        if len(self.edge_ids) != len(self.poi_ids):
            raise FormatError(
                f"trajectory {self.traj_id}: {len(self.edge_ids)} edge ids but {len(self.poi_ids)} POI ids"
            )

    def __len__(self) -> int:
        return len(self.edge_ids)


def annotate_trajectory(traj: Trajectory, segments: SegmentIndex, pois: PoiIndex) -> SemanticAnnotation:
    try:
        edge_ids = segments.nearest(segments.project(traj.lng, traj.lat))
        poi_ids = pois.nearest(traj.lng, traj.lat)
    except TrajMambaError as exc:
        raise type(exc)(f"trajectory {traj.traj_id}: {exc}") from exc
    return SemanticAnnotation(traj.traj_id, edge_ids, poi_ids)


def write_annotations(path: Union[str, Path], annotations: Iterable[SemanticAnnotation]) -> Path:
    rows = [
        {
            "traj_id": item.traj_id,
            "edge_ids": " ".join(str(int(v)) for v in item.edge_ids),
            "poi_ids": " ".join(str(int(v)) for v in item.poi_ids),
        }
        for item in annotations
    ]
    frame = pd.DataFrame(rows, columns=ANNOTATION_COLUMNS)
    with atomic_write(path) as file_obj:
        frame.to_csv(file_obj, index=False, lineterminator="\n")
    return Path(path)


def _parse_ids(raw: str, line: int, column: str) -> np.ndarray:
    try:
        return np.array([int(token) for token in raw.split()], dtype=np.int64)
    except ValueError as exc:
        raise ParseError(f"invalid {column} {raw!r}", line=line) from exc


def read_annotations(path: Union[str, Path]) -> Dict[int, SemanticAnnotation]:
    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"annotation file not found: {source}")
    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    if list(frame.columns) != ANNOTATION_COLUMNS:
        raise ParseError(f"header must be {','.join(ANNOTATION_COLUMNS)}", line=1)
    annotations: Dict[int, SemanticAnnotation] = {}
    for offset, row in enumerate(frame.itertuples(index=False)):
        line = offset + 2
        try:
            traj_id = int(row.traj_id)
        except ValueError as exc:
            raise ParseError(f"invalid traj_id {row.traj_id!r}", line=line) from exc
        edges = _parse_ids(row.edge_ids, line, "edge_ids")
        pois = _parse_ids(row.poi_ids, line, "poi_ids")
        if len(edges) != len(pois):
            raise ParseError("edge_ids and poi_ids differ in length", line=line)
        annotations[traj_id] = SemanticAnnotation(traj_id, edges, pois)
    return annotations


__all__ = [
    "ANNOTATION_COLUMNS",
    "SemanticAnnotation",
    "annotate_trajectory",
    "read_annotations",
    "write_annotations",
]
