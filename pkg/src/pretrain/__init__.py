"""Contrastive pre-training against road and POI views."""

from .checkpointing import PretrainComponents, load_encoder
from .loss import Temperature, alignment_accuracy, info_nce, similarity_matrix
from .trainer import PretrainResult, pretrain_run, pretrain_step

__all__ = [
    "PretrainComponents",
    "PretrainResult",
    "Temperature",
    "alignment_accuracy",
    "info_nce",
    "load_encoder",
    "pretrain_run",
    "pretrain_step",
    "similarity_matrix",
]
