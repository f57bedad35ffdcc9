"""Trajectory CSV reading and writing (``traj_id,seq,lng,lat,timestamp``)."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, ParseError
from ..utils.filesystem import atomic_write
from .types import Trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["traj_id", "seq", "lng", "lat", "timestamp"]
_INTEGER_COLUMNS = ("traj_id", "seq", "timestamp")
_LINE_PATTERN = re.compile(r"line (\d+)")


def _first_bad_line(mask: np.ndarray) -> int:
    # Data rows start on line 2, after the header.
    return int(np.argmax(mask)) + 2


def read_trajectories_csv(path: Union[str, Path]) -> List[Trajectory]:
    """Parse and validate a trajectory CSV; every defect is reported with its line."""

    source = Path(path)
    if not source.exists():
        raise ConfigurationError(f"trajectory file not found: {source}")
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as exc:
        raise ParseError("file is empty, expected a header", line=1) from exc
    except pd.errors.ParserError as exc:
        match = _LINE_PATTERN.search(str(exc))
        raise ParseError(f"wrong number of fields ({exc})", line=int(match.group(1)) if match else None) from exc
    if list(frame.columns) != TRAJECTORY_COLUMNS:
        raise ParseError(
            f"header must be {','.join(TRAJECTORY_COLUMNS)}, got {','.join(map(str, frame.columns))}",
            line=1,
        )
    if frame.empty:
        return []

    values = {}
    for column in TRAJECTORY_COLUMNS:
        numeric = pd.to_numeric(frame[column].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(numeric)
        if column in _INTEGER_COLUMNS:
            bad |= np.isfinite(numeric) & (numeric != np.round(numeric))
        if bad.any():
            line = _first_bad_line(bad)
            raise ParseError(f"invalid {column} value {frame[column].iloc[line - 2]!r}", line=line)
        values[column] = numeric

    traj_id = values["traj_id"].astype(np.int64)
    seq = values["seq"].astype(np.int64)
    timestamp = values["timestamp"].astype(np.int64)
    lng, lat = values["lng"], values["lat"]

    out_of_range = (np.abs(lng) > 180.0) | (np.abs(lat) > 90.0) | (timestamp < 0)
    if out_of_range.any():
        raise ParseError("coordinate or timestamp out of range", line=_first_bad_line(out_of_range))

    same = traj_id[1:] == traj_id[:-1]
    unsorted = (traj_id[1:] < traj_id[:-1]) | (same & (seq[1:] <= seq[:-1]))
    if unsorted.any():
        raise ParseError("rows must be sorted by (traj_id, seq)", line=_first_bad_line(unsorted) + 1)
    stalled = same & (timestamp[1:] <= timestamp[:-1])
    if stalled.any():
        raise ParseError("timestamps must strictly increase within a trajectory", line=_first_bad_line(stalled) + 1)

    starts = np.flatnonzero(np.concatenate([[True], ~same]))
    ends = np.append(starts[1:], len(traj_id))
    trajectories = [
        Trajectory(int(traj_id[start]), lng[start:end], lat[start:end], timestamp[start:end])
        for start, end in zip(starts, ends)
    ]
    logger.debug("Loaded %d trajectories from %s", len(trajectories), source)
    return trajectories


def trajectories_frame(trajectories: Iterable[Trajectory]) -> pd.DataFrame:
    frames = [
        pd.DataFrame(
            {
                "traj_id": np.full(len(traj), traj.traj_id, dtype=np.int64),
                "seq": np.arange(len(traj), dtype=np.int64),
                "lng": traj.lng,
                "lat": traj.lat,
                "timestamp": traj.t,
            }
        )
        for traj in trajectories
    ]
    if not frames:
        return pd.DataFrame(columns=TRAJECTORY_COLUMNS)
    return pd.concat(frames, ignore_index=True)[TRAJECTORY_COLUMNS]


def write_trajectories_csv(path: Union[str, Path], trajectories: Iterable[Trajectory]) -> Path:
    target = Path(path)
    with atomic_write(target) as file_obj:
        trajectories_frame(trajectories).to_csv(
            file_obj, index=False, float_format="%.6f", lineterminator="\n"
        )
    return target


__all__ = [
    "TRAJECTORY_COLUMNS",
    "read_trajectories_csv",
    "trajectories_frame",
    "write_trajectories_csv",
]
