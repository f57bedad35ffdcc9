"""Assemble and restore the pre-training checkpoint.

Entry names: encoder parameters as-is (``embedder.*``, ``block{l}.*``), the
view encoders under ``road_view.`` / ``poi_view.``, ``temperature.log_tau``,
``scaler.min`` / ``scaler.max`` and the Adam moments ``adam.m.*`` / ``adam.v.*``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigurationError
from ..mamba.model import ModelDims, TrajMambaModel
from ..models import RunConfig
from ..semantics.context import SemanticContext
from ..semantics.views import ViewEncoder
from ..tensor.autograd import precision
from ..tensor.checkpoint import load_tensors, read_manifest, save_tensors
from ..tensor.optim import Adam
from ..tensor.rng import Rng
from ..trajectory.scaler import FeatureScaler
from .loss import Temperature

logger = logging.getLogger(__name__)

ROAD_PREFIX = "road_view."
POI_PREFIX = "poi_view."
TEMPERATURE_PREFIX = "temperature."


def model_dims(config: RunConfig) -> ModelDims:
    return ModelDims(
        embed_dim=config.embed_dim,
        inner_dim=config.inner_dim,
        state_dim=config.state_dim,
        num_heads=config.num_heads,
        num_layers=config.num_layers,
        num_freqs=config.num_freqs,
        chunk_size=config.chunk_size,
        use_mb=config.use_mb,
    )


@dataclass
class PretrainComponents:
    """Everything trained jointly, with globally unique parameter names."""

    model: TrajMambaModel
    road_encoder: ViewEncoder
    poi_encoder: ViewEncoder
    temperature: Temperature

    def __post_init__(self) -> None:
        self.model.assign_names()
        self.road_encoder.assign_names(ROAD_PREFIX)
        self.poi_encoder.assign_names(POI_PREFIX)
        self.temperature.assign_names(TEMPERATURE_PREFIX)

    @classmethod
    def build(cls, config: RunConfig, context: SemanticContext, rng: Rng) -> "PretrainComponents":
        return cls(
            model=TrajMambaModel(model_dims(config), rng.child("traj_mamba")),
            road_encoder=context.road_encoder(config.embed_dim, config.view_heads, rng.child("road_view")),
            poi_encoder=context.poi_encoder(config.embed_dim, config.view_heads, rng.child("poi_view")),
            temperature=Temperature(),
        )

    def parameters(self):
        return (
            self.model.parameters()
            + self.road_encoder.parameters()
            + self.poi_encoder.parameters()
            + self.temperature.parameters()
        )

    def state_dict(self) -> Dict[str, np.ndarray]:
        tensors: Dict[str, np.ndarray] = {}
        tensors.update(self.model.state_dict())
        tensors.update(self.road_encoder.state_dict(ROAD_PREFIX))
        tensors.update(self.poi_encoder.state_dict(POI_PREFIX))
        tensors.update(self.temperature.state_dict(TEMPERATURE_PREFIX))
        return tensors

    def load_state_dict(self, tensors: Dict[str, np.ndarray]) -> None:
        self.model.load_state_dict(tensors)
        self.road_encoder.load_state_dict(tensors, ROAD_PREFIX)
        self.poi_encoder.load_state_dict(tensors, POI_PREFIX)
        self.temperature.load_state_dict(tensors, TEMPERATURE_PREFIX)


def save_pretrain_checkpoint(
    path: Union[str, Path],
    components: PretrainComponents,
    scaler: FeatureScaler,
    optimizer: Optional[Adam],
    config: RunConfig,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    tensors = components.state_dict()
    tensors.update(scaler.to_tensors())
    extra: Dict[str, Any] = {
        "config": config.model_dump(mode="json"),
        "config_hash": config.config_hash(),
        "dims": model_dims(config).as_dict(),
    }
    if optimizer is not None:
        tensors.update(optimizer.state_tensors())
        extra["adam_step"] = optimizer.state.step
    extra.update(metadata or {})
    return save_tensors(path, tensors, metadata=extra)


def restore_training_state(
    path: Union[str, Path],
    components: PretrainComponents,
    optimizer: Adam,
) -> Tuple[FeatureScaler, Dict[str, Any]]:
    tensors, metadata = load_tensors(path)
    components.load_state_dict(tensors)
    optimizer.load_state_tensors(tensors, metadata.get("adam_step", 0))
    return FeatureScaler.from_tensors(tensors), metadata


@dataclass
class LoadedEncoder:
    model: TrajMambaModel
    scaler: FeatureScaler
    config: RunConfig
    config_hash: str
    path: Path


def load_encoder(path: Union[str, Path]) -> LoadedEncoder:
    """Rebuild the trajectory encoder and scaler from a pre-training checkpoint."""

    root = Path(path)
    if not (root / "manifest.json").exists():
        raise ConfigurationError(f"checkpoint not found: {root}")
    manifest = read_manifest(root)
    stored = manifest.get("metadata", {})
    if "config" not in stored:
        raise ConfigurationError(f"{root} is not a pre-training checkpoint (no config metadata)")
    config = RunConfig.model_validate(stored["config"])
    tensors, _ = load_tensors(root)
    with precision(config.precision):
        model = TrajMambaModel(model_dims(config), Rng(config.seed).child("traj_mamba"))
    model.load_state_dict(tensors)
    logger.info("Loaded encoder from %s (%d parameters)", root, model.num_parameters())
    return LoadedEncoder(model, FeatureScaler.from_tensors(tensors), config, stored.get("config_hash", ""), root)


__all__ = [
    "LoadedEncoder",
    "PretrainComponents",
    "load_encoder",
    "model_dims",
    "restore_training_state",
    "save_pretrain_checkpoint",
]
