"""Similar-trajectory search: odd points as the query, even points as the target."""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, InputError
from ..mamba.model import encode_many
from ..models import EvalReport, RunConfig
from ..pretrain.checkpointing import LoadedEncoder
from ..tensor.autograd import precision
from ..tensor.rng import Rng
from ..trajectory.types import Trajectory
from .metrics import cosine_similarity, ranking_metrics, target_rank

logger = logging.getLogger(__name__)

DOWNSAMPLE_POINTS = 10
DISCARD_CLOSEST = 10
MIN_SEARCH_POINTS = 4

EmbedFn = Callable[[Sequence[Trajectory]], np.ndarray]


def odd_even_split(traj: Trajectory) -> Tuple[Trajectory, Trajectory]:
    """Query keeps points 1, 3, 5, ... (1-indexed); the target keeps 2, 4, 6, ..."""

    if len(traj) < 2:
        raise InputError(f"trajectory {traj.traj_id} needs at least 2 points to split")
    positions = np.arange(len(traj))
    return traj.take(positions[0::2]), traj.take(positions[1::2])


def downsample_uniform(traj: Trajectory, length: int = DOWNSAMPLE_POINTS) -> np.ndarray:
    """``[length, 2]`` raw coordinates at evenly spaced indices, both endpoints included."""

    index = np.rint(np.linspace(0, len(traj) - 1, length)).astype(np.int64)
    return traj.coords[index]


def raw_distances(query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Coordinate MSE between one ``[m, 2]`` query and ``[K, m, 2]`` candidates."""

    return np.mean((candidates - query[None, :, :]) ** 2, axis=(1, 2))


def simsearch_protocol(
    corpus: Sequence[Trajectory],
    embed_fn: EmbedFn,
    num_queries: int,
    db_size: int,
    seed: int,
) -> Dict[str, float]:
    """Acc@1, Acc@5 and mean rank of each target within its sampled database.

    Every database entry is the even-point half of a corpus trajectory, so the
    target and its distractors share the same sampling density. The ten
    trajectories closest to the query in raw space are removed before the
    distractors are drawn; the query's own trajectory is never a distractor.
    """

    corpus = [traj for traj in corpus if len(traj) >= MIN_SEARCH_POINTS]
    needed = max(num_queries, db_size + DISCARD_CLOSEST + 1)
    if len(corpus) < needed:
        raise ConfigurationError(
            f"similarity search needs {needed} trajectories (num_queries={num_queries}, "
            f"db_size={db_size}); corpus has {len(corpus)}"
        )

    halves = [odd_even_split(traj) for traj in corpus]
    rng = Rng(seed, "simsearch")
    query_rows = np.sort(rng.child("queries").permutation(len(corpus))[:num_queries])
    query_vectors = embed_fn([halves[row][0] for row in query_rows])
    target_vectors = embed_fn([target for _, target in halves])
    shapes = np.stack([downsample_uniform(traj) for traj in corpus])

    ranks: List[int] = []
    for position, row in enumerate(query_rows):
        distances = raw_distances(downsample_uniform(halves[row][0]), shapes)
        distances[row] = np.inf
        order = np.argsort(distances, kind="stable")
        eligible = np.sort(order[DISCARD_CLOSEST : len(corpus) - 1])
        picked = rng.child(f"database/{position}").permutation(len(eligible))[:db_size]
        database = np.concatenate([[row], eligible[picked]])
        similarities = cosine_similarity(query_vectors[position], target_vectors[database])
        ranks.append(target_rank(similarities, 0))

    metrics = ranking_metrics(ranks, ks=(1, 5))
    metrics["chance_acc@1"] = 1.0 / (db_size + 1)
    metrics["num_queries"] = float(len(ranks))
    logger.info(
        "simsearch: acc@1=%.4f acc@5=%.4f mean_rank=%.2f over %d queries",
        metrics["acc@1"],
        metrics["acc@5"],
        metrics["mean_rank"],
        len(ranks),
    )
    return metrics


def encoder_embed_fn(encoder: LoadedEncoder, batch_size: int = 64) -> EmbedFn:
    def embed(trajectories: Sequence[Trajectory]) -> np.ndarray:
        with precision(encoder.config.precision):
            return encode_many(trajectories, encoder.model, encoder.scaler, batch_size=batch_size)

    return embed


def evaluate_simsearch(encoder: LoadedEncoder, corpus: Sequence[Trajectory], config: RunConfig) -> EvalReport:
    metrics = simsearch_protocol(
        corpus,
        encoder_embed_fn(encoder, config.task_batch_size),
        num_queries=config.num_queries,
        db_size=config.db_size,
        seed=config.seed,
    )
    return EvalReport(
        task="simsearch",
        mode=config.mode,
        metrics=metrics,
        seed=config.seed,
        config_hash=config.config_hash(),
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


__all__ = [
    "DISCARD_CLOSEST",
    "DOWNSAMPLE_POINTS",
    "downsample_uniform",
    "encoder_embed_fn",
    "evaluate_simsearch",
    "odd_even_split",
    "raw_distances",
    "simsearch_protocol",
]
