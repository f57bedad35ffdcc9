"""Encode-time scaling against a full-attention encoder, plus model efficiency figures."""

from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..mamba.model import ModelDims, TrajMambaModel, encode_many
from ..models import RunConfig
from ..tensor.autograd import Tensor, no_grad, precision
from ..tensor.nn import LayerNorm, Module, MultiHeadSelfAttention
from ..tensor.rng import Rng
from ..trajectory.embedding import PaddedBatch
from ..trajectory.scaler import FeatureScaler
from ..trajectory.types import Trajectory
from ..utils.filesystem import atomic_write, write_json

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ["n", "trajmamba_s", "attention_s"]
SCALING_FILE = "bench_scaling.csv"
EFFICIENCY_FILE = "efficiency.json"
ATTENTION_LAYERS = 2
EFFICIENCY_SAMPLE = 64


class AttentionBaseline(Module):
    """Pre-norm residual self-attention layers, quadratic in sequence length."""

    _list_names = {"layers": "layer"}

    def __init__(self, width: int, num_heads: int, rng: Rng, num_layers: int = ATTENTION_LAYERS) -> None:
        self.norms = [LayerNorm(width) for _ in range(num_layers)]
        self.layers = [MultiHeadSelfAttention(width, num_heads, rng.child(f"layer{i}")) for i in range(num_layers)]
        self.assign_names("attention.")

    def __call__(self, x: Tensor) -> Tensor:
        for norm, attention in zip(self.norms, self.layers):
            x = x + attention(norm(x))
        return x


def bench_dims(config: RunConfig) -> ModelDims:
    return ModelDims(
        embed_dim=config.bench_embed_dim,
        inner_dim=config.bench_inner_dim,
        state_dim=config.bench_state_dim,
        num_heads=config.bench_num_heads,
        num_layers=config.bench_num_layers,
        num_freqs=config.num_freqs,
        chunk_size=config.chunk_size,
        use_mb=True,
    )


def random_batch(length: int, rng: Rng) -> PaddedBatch:
    """One synthetic sequence of already-scaled features."""

    minutes = np.cumsum(rng.uniform(0.1, 0.2, size=length))
    temporal = np.stack(
        [
            np.full(length, 2.0),
            np.full(length, 8.0),
            np.floor(minutes) % 60,
            minutes - minutes[0],
        ],
        axis=-1,
    )
    return PaddedBatch(
        traj_ids=[0],
        coords=rng.uniform(size=(1, length, 2)),
        temporal=temporal[None],
        movement=rng.uniform(size=(1, length, 3)),
        mask=np.ones((1, length), dtype=bool),
    )


def median_seconds(run: Callable[[], object], reps: int) -> float:
    """Median wall-clock time over ``reps`` runs after one discarded warm-up."""

    run()
    timings = []
    for _ in range(reps):
        began = time.perf_counter()
        run()
        timings.append(time.perf_counter() - began)
    return float(np.median(timings))


def bench_scaling(config: RunConfig, lengths: Optional[Sequence[int]] = None, reps: Optional[int] = None) -> pd.DataFrame:
    """Median forward seconds per length for the encoder and the attention baseline."""

    lengths = list(lengths or config.bench_lengths)
    reps = reps or config.bench_reps
    rows: List[Dict[str, float]] = []
    with precision(config.precision), no_grad():
        rng = Rng(config.seed, "bench")
        model = TrajMambaModel(bench_dims(config), rng.child("traj_mamba"))
        baseline = AttentionBaseline(config.bench_embed_dim, config.bench_num_heads, rng.child("attention"))
        for length in lengths:
            batch = random_batch(length, rng.child(f"inputs/{length}"))
            hidden = Tensor(rng.child(f"hidden/{length}").normal(size=(1, length, config.bench_embed_dim)))
            mamba_s = median_seconds(lambda: model.forward_batch(batch), reps)
            attention_s = median_seconds(lambda: baseline(hidden), reps)
            logger.info("n=%d trajmamba=%.4fs attention=%.4fs", length, mamba_s, attention_s)
            rows.append({"n": length, "trajmamba_s": mamba_s, "attention_s": attention_s})
    return pd.DataFrame(rows, columns=BENCH_COLUMNS)


def scaling_ratios(frame: pd.DataFrame, column: str) -> np.ndarray:
    """``t(n_{k+1}) / t(n_k)`` for consecutive rows."""

    times = frame[column].to_numpy(dtype=np.float64)
    return times[1:] / times[:-1]


def write_bench_csv(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    with atomic_write(path) as file_obj:
        frame.to_csv(file_obj, index=False, float_format="%.6f", lineterminator="\n")
    return Path(path)


def efficiency_report(
    model: TrajMambaModel,
    trajectories: Sequence[Trajectory],
    scaler: Optional[FeatureScaler] = None,
    train_s_per_epoch: Optional[float] = None,
) -> Dict[str, float]:
    """Parameter count, f32 size and mean per-trajectory encode time."""

    num_parameters = model.num_parameters()
    report: Dict[str, float] = {
        "num_parameters": float(num_parameters),
        "model_size_mb": num_parameters * 4 / 1e6,
    }
    sample = list(trajectories[:EFFICIENCY_SAMPLE])
    if sample:
        began = time.perf_counter()
        encode_many(sample, model, scaler, batch_size=1)
        report["embed_ms_per_traj"] = (time.perf_counter() - began) * 1000.0 / len(sample)
    if train_s_per_epoch is not None:
        report["train_s_per_epoch"] = float(train_s_per_epoch)
    return report


def run_bench(
    config: RunConfig,
    out_dir: Union[str, Path],
    model: TrajMambaModel,
    trajectories: Sequence[Trajectory],
    scaler: Optional[FeatureScaler] = None,
    train_s_per_epoch: Optional[float] = None,
) -> Dict[str, Path]:
    root = Path(out_dir)
    frame = bench_scaling(config)
    with precision(config.precision):
        report = efficiency_report(model, trajectories, scaler, train_s_per_epoch)
    for column in ("trajmamba_s", "attention_s"):
        report[f"{column}_max_ratio"] = float(scaling_ratios(frame, column).max())
    return {
        "scaling": write_bench_csv(root / SCALING_FILE, frame),
        "efficiency": write_json(root / EFFICIENCY_FILE, report),
    }


__all__ = [
    "AttentionBaseline",
    "BENCH_COLUMNS",
    "EFFICIENCY_FILE",
    "SCALING_FILE",
    "bench_scaling",
    "efficiency_report",
    "median_seconds",
    "random_batch",
    "run_bench",
    "scaling_ratios",
]
