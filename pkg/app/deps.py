"""Shared dependency definitions for FastAPI routers."""

from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional

from app.config import get_settings
from src.pretrain.checkpointing import LoadedEncoder, load_encoder
from src.pretrain.trainer import CHECKPOINT_DIR
from src.storage import RunLedger, default_ledger_url
from src.tensor.checkpoint import MANIFEST_NAME

logger = logging.getLogger(__name__)


@lru_cache(maxsize=4)
def _ledger_for(database_url: str) -> RunLedger:
    return RunLedger(database_url)


@lru_cache(maxsize=2)
def _encoder_for(path: str) -> LoadedEncoder:
    return load_encoder(path)


def get_ledger() -> RunLedger:
    """运行记录存储，按数据库地址复用同一实例。"""

    settings = get_settings()
    return _ledger_for(settings.database_url or default_ledger_url(settings.output_dir))


def checkpoint_location() -> Path:
    settings = get_settings()
    if settings.checkpoint:
        return Path(settings.checkpoint)
    return Path(settings.output_dir) / CHECKPOINT_DIR


def get_encoder() -> Optional[LoadedEncoder]:
    """已加载的编码器；检查点不存在时返回 ``None``。"""

    path = checkpoint_location()
    if not (path / MANIFEST_NAME).exists():
        logger.warning("No checkpoint at %s; embedding requests will be rejected", path)
        return None
    return _encoder_for(str(path.resolve()))


def reset_caches() -> None:
    _ledger_for.cache_clear()
    _encoder_for.cache_clear()


__all__ = ["checkpoint_location", "get_encoder", "get_ledger", "reset_caches"]
