"""Trajectory embedding endpoint backed by the loaded checkpoint."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from fastapi import APIRouter, Depends, FastAPI, HTTPException

from app.config import MAX_EMBED_TRAJECTORIES
from app.deps import get_encoder
from src.errors import TrajMambaError
from src.mamba.model import encode_many
from src.models import EmbeddingItem, EmbeddingRequest, EmbeddingResponse, TrajectoryPayload
from src.pretrain.checkpointing import LoadedEncoder
from src.tensor.autograd import precision
from src.trajectory.types import Trajectory

router = APIRouter(prefix="/v1", tags=["embeddings"])
logger = logging.getLogger(__name__)


def _to_trajectory(payload: TrajectoryPayload) -> Trajectory:
    """将请求中的点序列转换为轨迹对象并校验时间顺序。"""

    points = np.asarray(payload.points, dtype=np.float64)
    traj = Trajectory(payload.id, points[:, 0], points[:, 1], points[:, 2].astype(np.int64))
    traj.ensure_ordered()
    return traj


@router.post("/embeddings", response_model=EmbeddingResponse)
def create_embeddings(
    payload: EmbeddingRequest,
    encoder: Optional[LoadedEncoder] = Depends(get_encoder),
) -> EmbeddingResponse:
    """为每条轨迹计算一个 E 维向量。"""

    if encoder is None:
        raise HTTPException(status_code=503, detail="no checkpoint loaded; set TRAJMAMBA_CHECKPOINT")
    if len(payload.trajectories) > MAX_EMBED_TRAJECTORIES:
        raise HTTPException(
            status_code=400,
            detail=f"at most {MAX_EMBED_TRAJECTORIES} trajectories per request",
        )
    try:
        trajectories = [_to_trajectory(item) for item in payload.trajectories]
        with precision(encoder.config.precision):
            vectors = encode_many(trajectories, encoder.model, encoder.scaler)
    except TrajMambaError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    logger.info("Embedded %d trajectories", len(trajectories))
    return EmbeddingResponse(
        dim=encoder.model.dims.embed_dim,
        config_hash=encoder.config_hash or None,
        data=[
            EmbeddingItem(id=traj.traj_id, embedding=[float(v) for v in vector])
            for traj, vector in zip(trajectories, vectors)
        ],
    )


def register_routes(app: FastAPI) -> None:
    app.include_router(router)


__all__ = ["router", "register_routes"]
