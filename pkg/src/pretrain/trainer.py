"""Pre-training loop: align trajectory embeddings with the road and POI views."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, PreprocessingError
from ..models import RunConfig
from ..semantics.annotation import SemanticAnnotation
from ..semantics.context import SemanticContext
from ..semantics.views import pad_ids
from ..tensor.autograd import Tensor, no_grad, precision
from ..tensor.optim import Adam
from ..tensor.rng import Rng
from ..trajectory.embedding import PreparedTrajectory, pad_batch, prepare_trajectory
from ..trajectory.scaler import FeatureScaler, fit_trajectory_scaler
from ..trajectory.types import Trajectory
from ..utils.filesystem import atomic_write, write_json
from .checkpointing import PretrainComponents, restore_training_state, save_pretrain_checkpoint
from .loss import alignment_accuracy, info_nce, similarity_matrix

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ["epoch", "mean_loss", "road_loss", "poi_loss", "tau"]
CHECKPOINT_DIR = "checkpoint"
LOSS_FILE = "loss_curve.csv"
ALIGNMENT_FILE = "alignment.json"


@dataclass(frozen=True)
class TrainingExample:
    prepared: PreparedTrajectory
    annotation: SemanticAnnotation


@dataclass(frozen=True)
class StepLosses:
    total: float
    road: float = float("nan")
    poi: float = float("nan")


@dataclass
class PretrainResult:
    checkpoint_path: Path
    loss_curve: List[Dict[str, float]] = field(default_factory=list)
    alignment: Dict[str, float] = field(default_factory=dict)
    seconds_per_epoch: float = 0.0

    @property
    def metrics(self) -> Dict[str, float]:
        metrics: Dict[str, float] = {"seconds_per_epoch": self.seconds_per_epoch}
        if self.loss_curve:
            metrics["first_epoch_loss"] = self.loss_curve[0]["mean_loss"]
            metrics["final_epoch_loss"] = self.loss_curve[-1]["mean_loss"]
        for view, value in self.alignment.items():
            metrics[f"alignment_{view}"] = value
        return metrics


def build_examples(
    trajectories: Sequence[Trajectory],
    annotations: Mapping[int, SemanticAnnotation],
    scaler: FeatureScaler,
) -> List[TrainingExample]:
    examples = []
    for traj in trajectories:
        annotation = annotations.get(traj.traj_id)
        if annotation is None:
            raise PreprocessingError(
                f"trajectory {traj.traj_id} has no semantic annotation; run annotate first",
                traj_id=traj.traj_id,
            )
        if len(annotation) != len(traj):
            raise PreprocessingError(
                f"trajectory {traj.traj_id}: annotation length {len(annotation)} != {len(traj)} points",
                traj_id=traj.traj_id,
            )
        examples.append(TrainingExample(prepare_trajectory(traj, scaler), annotation))
    return examples


def batch_views(
    examples: Sequence[TrainingExample],
    components: PretrainComponents,
    use_road: bool,
    use_poi: bool,
):
    """Trajectory embeddings ``[B, E]`` and the enabled view embeddings."""

    z = components.model.forward_batch(pad_batch([example.prepared for example in examples]))
    views: Dict[str, Tensor] = {}
    if use_road:
        ids, mask = pad_ids([example.annotation.edge_ids for example in examples])
        views["road"] = components.road_encoder(ids, mask)
    if use_poi:
        ids, mask = pad_ids([example.annotation.poi_ids for example in examples])
        views["poi"] = components.poi_encoder(ids, mask)
    return z, views


def contrastive_loss(
    examples: Sequence[TrainingExample],
    components: PretrainComponents,
    use_road: bool = True,
    use_poi: bool = True,
):
    """Mean of the enabled per-view InfoNCE losses, plus the per-view values."""

    z, views = batch_views(examples, components, use_road, use_poi)
    tau = components.temperature()
    per_view = {name: info_nce(similarity_matrix(z, view), tau) for name, view in views.items()}
    terms = list(per_view.values())
    total = terms[0] if len(terms) == 1 else (terms[0] + terms[1]) * 0.5
    return total, per_view


def pretrain_step(
    examples: Sequence[TrainingExample],
    components: PretrainComponents,
    optimizer: Adam,
    use_road: bool = True,
    use_poi: bool = True,
) -> StepLosses:
    """One joint Adam update of the encoder, both view encoders and the temperature."""

    if len(examples) < 2:
        raise ConfigurationError("a contrastive step needs at least 2 trajectories")
    optimizer.zero_grad()
    total, per_view = contrastive_loss(examples, components, use_road, use_poi)
    total.backward()
    optimizer.step()
    return StepLosses(
        total=total.item(),
        road=per_view["road"].item() if "road" in per_view else float("nan"),
        poi=per_view["poi"].item() if "poi" in per_view else float("nan"),
    )


def epoch_order(seed: int, epoch: int, count: int) -> np.ndarray:
    """Batch order of one epoch; depends only on ``(seed, epoch)``."""

    return Rng(seed, f"pretrain/epoch{epoch}").permutation(count)


def write_loss_curve(path: Path, rows: Sequence[Dict[str, float]]) -> None:
    frame = pd.DataFrame(list(rows), columns=LOSS_COLUMNS)
    frame["epoch"] = frame["epoch"].astype(int)
    with atomic_write(path) as file_obj:
        frame.to_csv(file_obj, index=False, float_format="%.8g", lineterminator="\n")


def evaluate_alignment(
    examples: Sequence[TrainingExample],
    components: PretrainComponents,
    batch_size: int,
    use_road: bool,
    use_poi: bool,
) -> Dict[str, float]:
    """Alignment accuracy per enabled view over held-out batches."""

    if len(examples) < 2:
        return {}
    size = min(batch_size, len(examples))
    hits: Dict[str, List[float]] = {}
    with no_grad():
        for start in range(0, len(examples) - size + 1, size):
            z, views = batch_views(examples[start : start + size], components, use_road, use_poi)
            for name, view in views.items():
                hits.setdefault(name, []).append(alignment_accuracy(z.data, view.data))
    return {name: float(np.mean(values)) for name, values in hits.items()}


def pretrain_run(
    config: RunConfig,
    train: Sequence[Trajectory],
    val: Sequence[Trajectory],
    context: SemanticContext,
    output_dir: Path,
) -> PretrainResult:
    """Train for ``config.epochs`` epochs (or resume) and write checkpoint, loss curve and alignment."""

    output_dir = Path(output_dir)
    checkpoint_path = output_dir / CHECKPOINT_DIR
    if len(train) < config.batch_size and config.epochs > 0:
        raise ConfigurationError(
            f"training split has {len(train)} trajectories, fewer than batch_size {config.batch_size}"
        )
    with precision(config.precision):
        rng = Rng(config.seed)
        components = PretrainComponents.build(config, context, rng)
        optimizer = Adam(components.parameters(), lr=config.lr)
        curve: List[Dict[str, float]] = []
        start_epoch = 0
        if config.resume_from:
            scaler, metadata = restore_training_state(config.resume_from, components, optimizer)
            start_epoch = int(metadata.get("epoch", 0))
            curve = list(metadata.get("loss_curve", []))
            logger.info("Resuming from %s at epoch %d", config.resume_from, start_epoch)
        else:
            scaler = fit_trajectory_scaler(train)
        examples = build_examples(train, context.annotations, scaler)
        held_out = build_examples(val, context.annotations, scaler)

        batches_per_epoch = len(examples) // config.batch_size
        elapsed: List[float] = []
        for epoch in range(start_epoch, config.epochs):
            began = time.perf_counter()
            order = epoch_order(config.seed, epoch, len(examples))
            losses: List[StepLosses] = []
            for index in range(batches_per_epoch):
                chosen = order[index * config.batch_size : (index + 1) * config.batch_size]
                losses.append(
                    pretrain_step(
                        [examples[i] for i in chosen],
                        components,
                        optimizer,
                        use_road=config.use_road,
                        use_poi=config.use_poi,
                    )
                )
            row = {
                "epoch": epoch + 1,
                "mean_loss": float(np.mean([step.total for step in losses])),
                "road_loss": float(np.mean([step.road for step in losses])),
                "poi_loss": float(np.mean([step.poi for step in losses])),
                "tau": components.temperature.value,
            }
            curve.append(row)
            elapsed.append(time.perf_counter() - began)
            logger.info(
                "epoch %d/%d loss=%.5f road=%.5f poi=%.5f tau=%.4f",
                epoch + 1,
                config.epochs,
                row["mean_loss"],
                row["road_loss"],
                row["poi_loss"],
                row["tau"],
            )
            save_pretrain_checkpoint(
                checkpoint_path,
                components,
                scaler,
                optimizer,
                config,
                metadata={"epoch": epoch + 1, "loss_curve": curve},
            )
            write_loss_curve(output_dir / LOSS_FILE, curve)

        if not elapsed:
            save_pretrain_checkpoint(
                checkpoint_path,
                components,
                scaler,
                optimizer,
                config,
                metadata={"epoch": start_epoch, "loss_curve": curve},
            )
            write_loss_curve(output_dir / LOSS_FILE, curve)

        alignment = evaluate_alignment(held_out, components, config.batch_size, config.use_road, config.use_poi)
        write_json(output_dir / ALIGNMENT_FILE, alignment)

    return PretrainResult(
        checkpoint_path=checkpoint_path,
        loss_curve=curve,
        alignment=alignment,
        seconds_per_epoch=float(np.mean(elapsed)) if elapsed else 0.0,
    )


__all__ = [
    "LOSS_COLUMNS",
    "PretrainResult",
    "StepLosses",
    "TrainingExample",
    "build_examples",
    "contrastive_loss",
    "epoch_order",
    "evaluate_alignment",
    "pretrain_run",
    "pretrain_step",
]
