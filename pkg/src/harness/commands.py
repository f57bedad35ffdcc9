"""What each CLI subcommand does, independent of argument parsing and the ledger.

Every command returns a :class:`CommandResult`: the metrics recorded with the
run and the files it wrote, in the order they were produced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from app.config import Settings
from ..errors import ConfigurationError
from ..mamba.model import TrajMambaModel, encode_many
from ..models import EvalReport, RunConfig
from ..pretrain.checkpointing import LoadedEncoder, load_encoder, model_dims
from ..pretrain.trainer import ALIGNMENT_FILE, CHECKPOINT_DIR, LOSS_FILE, pretrain_run
from ..semantics.context import load_context
from ..semantics.text import build_provider
from ..tasks.regression import train_eval_regression
from ..tasks.simsearch import evaluate_simsearch
from ..tensor.autograd import precision
from ..tensor.checkpoint import save_tensors
from ..tensor.rng import Rng
from ..trajectory.types import Trajectory
from ..utils.filesystem import atomic_write, write_json
from .annotate import annotate
from .bench import run_bench
from .preprocess import SPLITS_FILE, TRAJECTORIES_FILE, load_dataset, preprocess, resample
from .synthetic import RAW_TRAJECTORIES_FILE, build_city, gen_data, generate_trajectories

logger = logging.getLogger(__name__)

EMBEDDINGS_DIR = "embeddings"
REPORTS_DIR = "reports"
EVAL_TASKS = ("destination", "arrival_time", "simsearch")


@dataclass
class CommandResult:
    metrics: Dict[str, float] = field(default_factory=dict)
    artifacts: List[Tuple[str, str, Path]] = field(default_factory=list)  # (name, type, path)


def checkpoint_path(config: RunConfig) -> Path:
    if config.checkpoint:
        return Path(config.checkpoint)
    return Path(config.output_dir) / CHECKPOINT_DIR


def run_gen_data(config: RunConfig) -> CommandResult:
    paths = gen_data(config.seed, config.num_traj, config.city_width, config.city_height, config.data_dir)
    return CommandResult(
        metrics={"num_traj": float(config.num_traj)},
        artifacts=[
            ("raw_trajectories", "csv", paths["trajectories"]),
            ("roads", "json", paths["roads"]),
            ("pois", "csv", paths["pois"]),
        ],
    )


def run_preprocess(config: RunConfig, raw_path: Optional[str] = None) -> CommandResult:
    source = Path(raw_path) if raw_path else Path(config.data_dir) / RAW_TRAJECTORIES_FILE
    paths = preprocess(source, config.data_dir)
    dataset = load_dataset(config.data_dir)
    return CommandResult(
        metrics={f"num_{name}": float(len(items)) for name, items in dataset.items()},
        artifacts=[("trajectories", "csv", paths["trajectories"]), ("splits", "json", paths["splits"])],
    )


def run_annotate(config: RunConfig) -> CommandResult:
    path = annotate(config.data_dir)
    return CommandResult(artifacts=[("annotations", "csv", path)])


def run_pretrain(config: RunConfig, settings: Settings) -> CommandResult:
    dataset = load_dataset(config.data_dir)
    provider = build_provider(
        config.text_provider,
        dim=config.text_dim,
        table_path=config.text_table_path,
        url=settings.embeddings_url,
        token=settings.embeddings_token,
    )
    context = load_context(config.data_dir, provider)
    output_dir = Path(config.output_dir)
    result = pretrain_run(config, dataset["train"], dataset["val"], context, output_dir)
    return CommandResult(
        metrics=result.metrics,
        artifacts=[
            ("checkpoint", "checkpoint", result.checkpoint_path),
            ("loss_curve", "csv", output_dir / LOSS_FILE),
            ("alignment", "json", output_dir / ALIGNMENT_FILE),
        ],
    )


def _all_trajectories(dataset: Dict[str, List[Trajectory]]) -> List[Trajectory]:
    return dataset["train"] + dataset["val"] + dataset["test"]


def run_embed(config: RunConfig, split: str = "all", out_dir: Optional[str] = None) -> CommandResult:
    """One ``traj:<id>`` tensor per trajectory, stored in the checkpoint format."""

    encoder = load_encoder(checkpoint_path(config))
    dataset = load_dataset(config.data_dir)
    trajectories = _all_trajectories(dataset) if split == "all" else dataset[split]
    with precision(encoder.config.precision):
        vectors = encode_many(trajectories, encoder.model, encoder.scaler, batch_size=config.task_batch_size)
    target = Path(out_dir) if out_dir else Path(config.output_dir) / EMBEDDINGS_DIR
    save_tensors(
        target,
        {f"traj:{traj.traj_id}": vector for traj, vector in zip(trajectories, vectors)},
        metadata={"config_hash": encoder.config_hash, "dim": encoder.model.dims.embed_dim, "split": split},
    )
    logger.info("Wrote %d embeddings to %s", len(trajectories), target)
    return CommandResult(metrics={"num_embeddings": float(len(trajectories))}, artifacts=[("embeddings", "checkpoint", target)])


def simsearch_corpus(config: RunConfig, dataset: Dict[str, List[Trajectory]]) -> List[Trajectory]:
    if config.simsearch_corpus == "test":
        return dataset["test"]
    if config.simsearch_corpus == "heldout":
        return dataset["val"] + dataset["test"]
    return _all_trajectories(dataset)


def write_eval_report(report: EvalReport, reports_dir: Path) -> Tuple[Path, Path]:
    """JSON per run plus one appended row in the task's CSV."""

    stem = f"{report.task}_{report.mode}"
    json_path = write_json(reports_dir / f"{stem}.json", report.model_dump(mode="json"))
    csv_path = reports_dir / f"{report.task}.csv"
    row = {"timestamp": report.timestamp, "mode": report.mode, "seed": report.seed, "config_hash": report.config_hash}
    row.update(report.metrics)
    frame = pd.DataFrame([row])
    if csv_path.exists():
        # union of columns across modes
        frame = pd.concat([pd.read_csv(csv_path), frame], ignore_index=True)
    with atomic_write(csv_path) as file_obj:
        frame.to_csv(file_obj, index=False, lineterminator="\n")
    return json_path, csv_path


def evaluate(config: RunConfig, task: str, encoder: LoadedEncoder, dataset: Dict[str, List[Trajectory]]) -> EvalReport:
    if task == "simsearch":
        return evaluate_simsearch(encoder, simsearch_corpus(config, dataset), config)
    return train_eval_regression(task, config.mode, encoder, dataset["train"], dataset["val"], dataset["test"], config)


def run_eval(config: RunConfig, task: str) -> CommandResult:
    if task not in EVAL_TASKS:
        raise ConfigurationError(f"unknown task {task!r}; expected one of {', '.join(EVAL_TASKS)}")
    encoder = load_encoder(checkpoint_path(config))
    dataset = load_dataset(config.data_dir)
    report = evaluate(config, task, encoder, dataset)
    json_path, csv_path = write_eval_report(report, Path(config.output_dir) / REPORTS_DIR)
    logger.info("%s (%s): %s", task, config.mode, ", ".join(f"{k}={v:.4f}" for k, v in sorted(report.metrics.items())))
    return CommandResult(
        metrics=report.metrics,
        artifacts=[("eval_report", "json", json_path), ("eval_reports", "csv", csv_path)],
    )


def _bench_sample(config: RunConfig) -> List[Trajectory]:
    """Filtered trajectories when the dataset exists, else a small generated set."""

    data_dir = Path(config.data_dir)
    if (data_dir / SPLITS_FILE).exists() and (data_dir / TRAJECTORIES_FILE).exists():
        return load_dataset(data_dir)["test"]
    city = build_city(config.seed, config.city_width, config.city_height)
    resampled = [resample(traj) for traj in generate_trajectories(city, config.seed, 64)]
    return [traj for traj in resampled if len(traj) >= 2]


def run_bench_command(config: RunConfig, train_s_per_epoch: Optional[float] = None) -> CommandResult:
    path = checkpoint_path(config)
    scaler = None
    if (path / "manifest.json").exists():
        encoder = load_encoder(path)
        model, scaler = encoder.model, encoder.scaler
    else:
        with precision(config.precision):
            model = TrajMambaModel(model_dims(config), Rng(config.seed).child("traj_mamba"))
    paths = run_bench(config, config.output_dir, model, _bench_sample(config), scaler, train_s_per_epoch)
    frame = pd.read_csv(paths["scaling"])
    metrics = {f"trajmamba_s@{int(n)}": float(t) for n, t in zip(frame["n"], frame["trajmamba_s"])}
    metrics.update({f"attention_s@{int(n)}": float(t) for n, t in zip(frame["n"], frame["attention_s"])})
    return CommandResult(
        metrics=metrics,
        artifacts=[("bench_scaling", "csv", paths["scaling"]), ("efficiency", "json", paths["efficiency"])],
    )


__all__ = [
    "CommandResult",
    "EVAL_TASKS",
    "checkpoint_path",
    "evaluate",
    "run_annotate",
    "run_bench_command",
    "run_embed",
    "run_eval",
    "run_gen_data",
    "run_pretrain",
    "run_preprocess",
    "simsearch_corpus",
    "write_eval_report",
]
