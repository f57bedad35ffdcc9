"""Map-match every filtered trajectory and attach its nearest POIs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

from ..semantics.annotation import annotate_trajectory, write_annotations
from ..semantics.context import ANNOTATIONS_FILE, POIS_FILE, ROADS_FILE
from ..semantics.matching import PoiIndex, SegmentIndex
from ..semantics.network import load_pois, load_road_network
from ..trajectory.io import read_trajectories_csv
from .preprocess import TRAJECTORIES_FILE

logger = logging.getLogger(__name__)


def annotate(data_dir: Union[str, Path], out_path: Optional[Union[str, Path]] = None) -> Path:
    """Write ``annotations.csv`` with one row per trajectory, in file order."""

    root = Path(data_dir)
    trajectories = read_trajectories_csv(root / TRAJECTORIES_FILE)
    segments = SegmentIndex.for_dataset(load_road_network(root / ROADS_FILE), trajectories)
    pois = PoiIndex(load_pois(root / POIS_FILE))
    annotations = [annotate_trajectory(traj, segments, pois) for traj in trajectories]
    target = write_annotations(Path(out_path) if out_path else root / ANNOTATIONS_FILE, annotations)
    logger.info("Annotated %d trajectories into %s", len(annotations), target)
    return target


__all__ = ["annotate"]
