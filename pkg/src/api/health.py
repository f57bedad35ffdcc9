"""Health check endpoints."""

from __future__ import annotations

import time
from typing import Dict, Union

from fastapi import APIRouter, FastAPI

from app.deps import checkpoint_location
from src.tensor.checkpoint import MANIFEST_NAME

router = APIRouter(tags=["health"])


@router.get("/healthz")
def health() -> Dict[str, str]:
    """对外暴露的健康检查接口。"""

    return {"status": "ok"}


@router.get("/_internal/health")
def internal_health() -> Dict[str, Union[str, float, bool]]:
    """内部探针：附带检查点是否就绪。"""

    return {
        "status": "ok",
        "time": time.time(),
        "checkpoint_ready": (checkpoint_location() / MANIFEST_NAME).exists(),
    }


def register_routes(app: FastAPI) -> None:
    app.include_router(router)


__all__ = ["router", "register_routes"]
