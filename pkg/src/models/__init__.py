"""Pydantic data models shared across the toolkit and its HTTP service."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RunConfig(BaseModel):
    """All hyperparameters and paths of one run; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 7
    precision: Literal["f32", "f64"] = "f32"
    data_dir: str = "data"
    output_dir: str = "runs"

    # synthetic city
    num_traj: int = Field(2000, ge=1)
    city_width: int = Field(20, ge=1)
    city_height: int = Field(20, ge=1)

    # encoder
    embed_dim: int = Field(64, ge=1)
    inner_dim: int = Field(64, ge=1)
    state_dim: int = Field(16, ge=1)
    num_heads: int = Field(4, ge=1)
    num_layers: int = Field(2, ge=1)
    num_freqs: int = Field(16, ge=1)
    chunk_size: int = Field(32, ge=1)

    # travel-purpose views
    view_heads: int = Field(4, ge=1)
    text_dim: int = Field(64, ge=1)
    text_provider: Literal["hash", "file", "remote"] = "hash"
    text_table_path: Optional[str] = None

    # pre-training
    batch_size: int = Field(32, ge=2)
    epochs: int = Field(30, ge=0)
    lr: float = Field(1e-3, gt=0)
    use_road: bool = True
    use_poi: bool = True
    use_mb: bool = True
    resume_from: Optional[str] = None
    checkpoint: Optional[str] = None

    # downstream tasks
    mode: Literal["frozen", "finetune"] = "frozen"
    head_epochs: int = Field(50, ge=1)
    patience: int = Field(5, ge=1)
    head_lr: float = Field(1e-3, gt=0)
    task_batch_size: int = Field(64, ge=1)
    num_queries: int = Field(200, ge=1)
    db_size: int = Field(2000, ge=1)
    simsearch_corpus: Literal["test", "heldout", "all"] = "test"

    # benchmark
    bench_lengths: List[int] = Field(default_factory=lambda: [512, 1024, 2048])
    bench_reps: int = Field(5, ge=1)
    bench_embed_dim: int = Field(256, ge=1)
    bench_inner_dim: int = Field(256, ge=1)
    bench_state_dim: int = Field(128, ge=1)
    bench_num_heads: int = Field(4, ge=1)
    bench_num_layers: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if not (self.use_road or self.use_poi):
            raise ValueError("at least one of use_road / use_poi must be true")
        if self.inner_dim % self.num_heads:
            raise ValueError("inner_dim must be divisible by num_heads")
        if self.embed_dim % self.view_heads:
            raise ValueError("embed_dim must be divisible by view_heads")
        if self.bench_inner_dim % self.bench_num_heads:
            raise ValueError("bench_inner_dim must be divisible by bench_num_heads")
        if len(self.bench_lengths) < 2 or min(self.bench_lengths) < 2:
            raise ValueError("bench_lengths needs at least two lengths >= 2")
        return self

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """sha256 of the sorted-key compact JSON; independent of key order in the source file."""

        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


class EvalReport(BaseModel):
    """Outcome of one downstream evaluation."""

    task: Literal["destination", "arrival_time", "simsearch"]
    mode: Literal["frozen", "finetune"]
    metrics: Dict[str, float] = Field(default_factory=dict)
    seed: int
    config_hash: str
    timestamp: str


class RunStatus(str, Enum):
    """Lifecycle of a ledger run."""

    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class ArtifactRecord(BaseModel):
    id: str
    run_id: str
    name: str
    type: str
    path: str
    created_at: datetime


class RunRecord(BaseModel):
    """One tracked CLI invocation with its metrics and produced files."""

    id: str
    kind: str
    status: RunStatus
    config_hash: str
    config: Dict[str, object] = Field(default_factory=dict)
    metrics: Dict[str, float] = Field(default_factory=dict)
    detail: Optional[str] = None
    created_at: datetime
    updated_at: datetime
    completed_at: Optional[datetime] = None
    artifacts: List[ArtifactRecord] = Field(default_factory=list)


class TrajectoryPayload(BaseModel):
    """A trajectory in a request body: ``[lng, lat, unix_seconds]`` triples."""

    id: int
    points: List[Tuple[float, float, int]] = Field(..., min_length=2)


class EmbeddingRequest(BaseModel):
    trajectories: List[TrajectoryPayload] = Field(..., min_length=1)


class EmbeddingItem(BaseModel):
    id: int
    embedding: List[float]


class EmbeddingResponse(BaseModel):
    dim: int
    config_hash: Optional[str] = None
    data: List[EmbeddingItem]


__all__ = [
    "ArtifactRecord",
    "EmbeddingItem",
    "EmbeddingRequest",
    "EmbeddingResponse",
    "EvalReport",
    "RunConfig",
    "RunRecord",
    "RunStatus",
    "TrajectoryPayload",
]
