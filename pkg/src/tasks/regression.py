"""Destination prediction and arrival-time estimation from truncated trajectories."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import ConfigurationError
from ..mamba.model import TrajMambaModel, encode_many
from ..models import EvalReport, RunConfig
from ..pretrain.checkpointing import LoadedEncoder
from ..tensor.autograd import Tensor, no_grad, precision
from ..tensor.optim import Adam
from ..tensor.rng import Rng
from ..trajectory.embedding import pad_batch, prepare_trajectory
from ..trajectory.geo import haversine_vectorized
from ..trajectory.scaler import FeatureScaler
from ..trajectory.types import Trajectory
from .heads import OUTPUT_DIMS, TaskHead
from .metrics import MAPE_MIN_TARGET_S, distance_metrics, regression_metrics

logger = logging.getLogger(__name__)

TRUNCATE_POINTS = 5
MIN_PREFIX_POINTS = 2


def truncate_for_task(traj: Trajectory) -> Optional[Trajectory]:
    """Drop the final five points; ``None`` when fewer than two would remain."""

    if len(traj) < TRUNCATE_POINTS + MIN_PREFIX_POINTS:
        return None
    return traj.prefix(len(traj) - TRUNCATE_POINTS)


@dataclass(frozen=True)
class TaskSplit:
    """Prefixes paired with the untruncated trajectories they came from."""

    prefixes: List[Trajectory]
    full: List[Trajectory]
    skipped: int

    def __len__(self) -> int:
        return len(self.prefixes)


def truncate_split(trajectories: Sequence[Trajectory], name: str) -> TaskSplit:
    prefixes, full = [], []
    for traj in trajectories:
        prefix = truncate_for_task(traj)
        if prefix is None:
            continue
        prefixes.append(prefix)
        full.append(traj)
    skipped = len(trajectories) - len(prefixes)
    if skipped:
        logger.warning("Skipped %d %s trajectories shorter than %d points", skipped, name, TRUNCATE_POINTS + MIN_PREFIX_POINTS)
    return TaskSplit(prefixes, full, skipped)


class TargetCodec:
    """Maps task targets to the normalized space the head is trained in."""

    def __init__(self, task: str, scaler: FeatureScaler, train: TaskSplit) -> None:
        self.task = task
        if task == "destination":
            self.low = scaler.minimum[:2]
            self.span = np.where(scaler.maximum[:2] > scaler.minimum[:2], scaler.maximum[:2] - scaler.minimum[:2], 1.0)
        elif task == "arrival_time":
            durations = self.raw(train.full)
            self.low = np.array([durations.mean()])
            spread = durations.std()
            self.span = np.array([spread if spread > 0 else 1.0])
        else:
            raise ConfigurationError(f"unknown regression task {task!r}")

    def raw(self, trajectories: Sequence[Trajectory]) -> np.ndarray:
        if self.task == "destination":
            return np.array([[traj.lng[-1], traj.lat[-1]] for traj in trajectories], dtype=np.float64)
        return np.array([[traj.duration_seconds] for traj in trajectories], dtype=np.float64)

    def encode(self, values: np.ndarray) -> np.ndarray:
        return (values - self.low) / self.span

    def decode(self, values: np.ndarray) -> np.ndarray:
        return values * self.span + self.low


def score_predictions(task: str, predicted: np.ndarray, actual: np.ndarray) -> Dict[str, float]:
    """Meters between points for destinations, seconds (and %) for travel time."""

    if task == "destination":
        errors = haversine_vectorized(predicted[:, 0], predicted[:, 1], actual[:, 0], actual[:, 1])
        return distance_metrics(errors)
    with_mape = bool(np.all(actual >= MAPE_MIN_TARGET_S))
    return regression_metrics(predicted[:, 0], actual[:, 0], with_mape=with_mape)


def baseline_predictions(task: str, split: TaskSplit, train: TaskSplit, codec: TargetCodec) -> np.ndarray:
    """Last observed point for destinations; the training mean for travel time."""

    if task == "destination":
        return np.array([[traj.lng[-1], traj.lat[-1]] for traj in split.prefixes], dtype=np.float64)
    mean = codec.raw(train.full).mean()
    return np.full((len(split), 1), mean)


def _mse(pred: Tensor, target: np.ndarray) -> Tensor:
    diff = pred - target
    return (diff * diff).mean()


class _Predictor:
    """Runs the head on frozen features or on the live encoder."""

    def __init__(self, model: TrajMambaModel, head: TaskHead, scaler: FeatureScaler, finetune: bool) -> None:
        self.model = model
        self.head = head
        self.scaler = scaler
        self.finetune = finetune

    def features(self, split: TaskSplit):
        if self.finetune:
            return [prepare_trajectory(traj, self.scaler) for traj in split.prefixes]
        return encode_many(split.prefixes, self.model, self.scaler)

    def forward(self, features, index: np.ndarray) -> Tensor:
        if self.finetune:
            batch = pad_batch([features[i] for i in index])
            return self.head(self.model.forward_batch(batch))
        return self.head(Tensor(features[index]))

    def predict(self, features, batch_size: int) -> np.ndarray:
        count = len(features)
        rows = []
        with no_grad():
            for start in range(0, count, batch_size):
                rows.append(self.forward(features, np.arange(start, min(start + batch_size, count))).data)
        return np.concatenate(rows, axis=0).astype(np.float64)


def train_eval_regression(
    task: str,
    mode: str,
    encoder: LoadedEncoder,
    train: Sequence[Trajectory],
    val: Sequence[Trajectory],
    test: Sequence[Trajectory],
    config: RunConfig,
) -> EvalReport:
    """Fit a head with MSE on normalized targets, early-stopping on validation MAE."""

    if task not in OUTPUT_DIMS:
        raise ConfigurationError(f"unknown regression task {task!r}")
    splits = {name: truncate_split(data, name) for name, data in (("train", train), ("val", val), ("test", test))}
    for name, split in splits.items():
        if len(split) == 0:
            raise ConfigurationError(f"{name} split has no trajectory long enough for {task}")

    finetune = mode == "finetune"
    with precision(encoder.config.precision):
        codec = TargetCodec(task, encoder.scaler, splits["train"])
        head = TaskHead(encoder.model.dims.embed_dim, OUTPUT_DIMS[task], Rng(config.seed).child(f"head/{task}"))
        head.assign_names("head.")
        predictor = _Predictor(encoder.model, head, encoder.scaler, finetune)
        params = head.parameters() + (encoder.model.parameters() if finetune else [])
        optimizer = Adam(params, lr=config.head_lr)

        features = {name: predictor.features(split) for name, split in splits.items()}
        train_targets = codec.encode(codec.raw(splits["train"].full))
        val_actual = codec.raw(splits["val"].full)

        best_mae = np.inf
        best_state: Dict[str, np.ndarray] = {}
        waited = 0
        for epoch in range(config.head_epochs):
            order = Rng(config.seed, f"{task}/epoch{epoch}").permutation(len(splits["train"]))
            for start in range(0, len(order), config.task_batch_size):
                index = order[start : start + config.task_batch_size]
                optimizer.zero_grad()
                loss = _mse(predictor.forward(features["train"], index), train_targets[index])
                loss.backward()
                optimizer.step()
            val_pred = codec.decode(predictor.predict(features["val"], config.task_batch_size))
            val_mae = score_predictions(task, val_pred, val_actual)["mae"]
            logger.debug("%s epoch %d val_mae=%.4f", task, epoch + 1, val_mae)
            if val_mae < best_mae:
                best_mae = val_mae
                best_state = {param.name: param.data.copy() for param in params}
                waited = 0
            else:
                waited += 1
                if waited >= config.patience:
                    logger.info("%s early stop at epoch %d (best val MAE %.4f)", task, epoch + 1, best_mae)
                    break
        for param in params if best_state else []:
            param.data = best_state[param.name]

        test_actual = codec.raw(splits["test"].full)
        test_pred = codec.decode(predictor.predict(features["test"], config.task_batch_size))
        metrics = score_predictions(task, test_pred, test_actual)
        baseline = score_predictions(task, baseline_predictions(task, splits["test"], splits["train"], codec), test_actual)

    metrics.update({f"baseline_{key}": value for key, value in baseline.items()})
    metrics["best_val_mae"] = float(best_mae)
    metrics["num_test"] = float(len(splits["test"]))
    metrics["num_skipped"] = float(sum(split.skipped for split in splits.values()))
    return EvalReport(
        task=task,
        mode=mode,
        metrics=metrics,
        seed=config.seed,
        config_hash=config.config_hash(),
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


__all__ = [
    "TaskSplit",
    "TargetCodec",
    "baseline_predictions",
    "score_predictions",
    "train_eval_regression",
    "truncate_for_task",
    "truncate_split",
]
