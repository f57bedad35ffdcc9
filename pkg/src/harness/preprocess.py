"""Resampling, length filtering and the chronological 8:1:1 split."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

from pydantic import BaseModel, model_validator

from ..errors import ConfigurationError
from ..trajectory.io import read_trajectories_csv, write_trajectories_csv
from ..trajectory.types import Trajectory
from ..utils.filesystem import read_json, write_json

logger = logging.getLogger(__name__)

TRAJECTORIES_FILE = "trajectories.csv"
SPLITS_FILE = "splits.json"
HOP = 3
MIN_POINTS = 5
MAX_POINTS = 120
SPLIT_RATIOS = (8, 1, 1)


class DatasetSplits(BaseModel):
    """Trajectory ids per split; disjoint."""

    train: List[int]
    val: List[int]
    test: List[int]

    @model_validator(mode="after")
    def _check_disjoint(self) -> "DatasetSplits":
        ids = self.train + self.val + self.test
        if len(ids) != len(set(ids)):
            raise ValueError("splits must be disjoint")
        return self

    def select(self, trajectories: Sequence[Trajectory]) -> Dict[str, List[Trajectory]]:
        by_id = {traj.traj_id: traj for traj in trajectories}
        missing = [i for i in self.train + self.val + self.test if i not in by_id]
        if missing:
            raise ConfigurationError(f"split references unknown trajectory {missing[0]}")
        return {
            "train": [by_id[i] for i in self.train],
            "val": [by_id[i] for i in self.val],
            "test": [by_id[i] for i in self.test],
        }


def resample(traj: Trajectory, hop: int = HOP) -> Trajectory:
    """Three-hop resampling: keep every third point starting at the first."""

    return traj.take(range(0, len(traj), hop))


def keep_length(traj: Trajectory) -> bool:
    return MIN_POINTS <= len(traj) <= MAX_POINTS


def chronological_split(trajectories: Sequence[Trajectory]) -> DatasetSplits:
    """8:1:1 by count over trajectories ordered by departure (ties by id)."""

    ordered = sorted(trajectories, key=lambda traj: (traj.departure_time, traj.traj_id))
    total = len(ordered)
    n_train = total * SPLIT_RATIOS[0] // sum(SPLIT_RATIOS)
    n_val = total * SPLIT_RATIOS[1] // sum(SPLIT_RATIOS)
    ids = [traj.traj_id for traj in ordered]
    return DatasetSplits(train=ids[:n_train], val=ids[n_train : n_train + n_val], test=ids[n_train + n_val :])


def preprocess_trajectories(raw: Sequence[Trajectory]) -> Tuple[List[Trajectory], DatasetSplits]:
    kept = []
    for traj in raw:
        traj.ensure_ordered()
        resampled = resample(traj)
        if keep_length(resampled):
            kept.append(resampled)
    dropped = len(raw) - len(kept)
    if dropped:
        logger.warning("Dropped %d of %d trajectories outside %d..%d points", dropped, len(raw), MIN_POINTS, MAX_POINTS)
    return kept, chronological_split(kept)


def preprocess(raw_path: Union[str, Path], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Raw CSV in, filtered ``trajectories.csv`` and ``splits.json`` out."""

    root = Path(out_dir)
    kept, splits = preprocess_trajectories(read_trajectories_csv(raw_path))
    if not kept:
        raise ConfigurationError(f"no trajectory in {raw_path} survives filtering")
    logger.info("Split %d trajectories into %d/%d/%d", len(kept), len(splits.train), len(splits.val), len(splits.test))
    return {
        "trajectories": write_trajectories_csv(root / TRAJECTORIES_FILE, kept),
        "splits": write_json(root / SPLITS_FILE, splits.model_dump()),
    }


def load_splits(path: Union[str, Path]) -> DatasetSplits:
    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"splits file not found: {source}")
    return DatasetSplits.model_validate(read_json(source))


def load_dataset(data_dir: Union[str, Path]) -> Dict[str, List[Trajectory]]:
    """Filtered trajectories grouped by split."""

    root = Path(data_dir)
    splits = load_splits(root / SPLITS_FILE)
    return splits.select(read_trajectories_csv(root / TRAJECTORIES_FILE))


__all__ = [
    "DatasetSplits",
    "SPLITS_FILE",
    "TRAJECTORIES_FILE",
    "chronological_split",
    "keep_length",
    "load_dataset",
    "load_splits",
    "preprocess",
    "preprocess_trajectories",
    "resample",
]
