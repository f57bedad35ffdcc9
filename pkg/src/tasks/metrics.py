"""Regression and ranking metrics."""

from __future__ import annotations

from typing import Dict, Sequence

import numpy as np

from ..errors import DimensionError, GuardError, InputError

MAPE_MIN_TARGET_S = 60.0


def regression_metrics(preds: Sequence[float], targets: Sequence[float], with_mape: bool = True) -> Dict[str, float]:
    """``mae``, ``rmse`` and (optionally) ``mape`` in percent."""

    preds = np.asarray(preds, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if preds.shape != targets.shape:
        raise DimensionError(f"{preds.shape[0]} predictions for {targets.shape[0]} targets")
    if preds.size == 0:
        raise InputError("metrics need at least one prediction")
    errors = np.abs(preds - targets)
    metrics = {"mae": float(errors.mean()), "rmse": float(np.sqrt(np.mean(errors**2)))}
    if with_mape:
        if np.any(targets == 0):
            raise GuardError("MAPE is undefined for zero targets")
        metrics["mape"] = float(np.mean(errors / np.abs(targets)) * 100.0)
    return metrics


def distance_metrics(distances: Sequence[float]) -> Dict[str, float]:
    """MAE/RMSE of non-negative error distances (e.g. meters between points)."""

    distances = np.asarray(distances, dtype=np.float64).reshape(-1)
    if distances.size == 0:
        raise InputError("metrics need at least one prediction")
    return {"mae": float(distances.mean()), "rmse": float(np.sqrt(np.mean(distances**2)))}


def cosine_similarity(query: np.ndarray, database: np.ndarray) -> np.ndarray:
    """Cosine similarity of one vector against every row of ``database``."""

    query = np.asarray(query, dtype=np.float64)
    database = np.asarray(database, dtype=np.float64)
    norms = np.linalg.norm(database, axis=1) * np.linalg.norm(query)
    return (database @ query) / np.where(norms > 0, norms, 1.0)


def target_rank(similarities: np.ndarray, target_index: int) -> int:
    """1-based rank of the target; every other candidate scoring at least as high outranks it."""

    similarities = np.asarray(similarities, dtype=np.float64)
    others = np.delete(similarities, target_index)
    return int(np.sum(others >= similarities[target_index])) + 1


def ranking_metrics(ranks: Sequence[int], ks: Sequence[int] = (1, 5)) -> Dict[str, float]:
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        raise InputError("ranking metrics need at least one query")
    if ranks.min() < 1:
        raise InputError("ranks are 1-based")
    metrics = {f"acc@{k}": float(np.mean(ranks <= k)) for k in ks}
    metrics["mean_rank"] = float(ranks.mean())
    return metrics


__all__ = [
    "MAPE_MIN_TARGET_S",
    "cosine_similarity",
    "distance_metrics",
    "ranking_metrics",
    "regression_metrics",
    "target_rank",
]
