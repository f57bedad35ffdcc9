"""Process-level settings read from the environment.

Hyperparameters live in ``RunConfig``; this module only covers where records
are stored, which embedding endpoint to call and which checkpoint to serve.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Final, Optional

DB_URL_ENV: Final[str] = "TRAJMAMBA_DB_URL"
EMBEDDINGS_URL_ENV: Final[str] = "TRAJMAMBA_EMBEDDINGS_URL"
EMBEDDINGS_TOKEN_ENV: Final[str] = "TRAJMAMBA_EMBEDDINGS_TOKEN"
CHECKPOINT_ENV: Final[str] = "TRAJMAMBA_CHECKPOINT"
OUTPUT_DIR_ENV: Final[str] = "TRAJMAMBA_OUTPUT_DIR"

DEFAULT_OUTPUT_DIR: Final[str] = "runs"
MAX_EMBED_TRAJECTORIES: Final[int] = 1024


@dataclass(frozen=True)
class Settings:
    database_url: Optional[str]
    embeddings_url: Optional[str]
    embeddings_token: Optional[str]
    checkpoint: Optional[str]
    output_dir: str


def _env(name: str) -> Optional[str]:
    value = os.getenv(name, "").strip()
    return value or None


def get_settings() -> Settings:
    """Read the environment on every call so tests can patch it."""

    return Settings(
        database_url=_env(DB_URL_ENV),
        embeddings_url=_env(EMBEDDINGS_URL_ENV),
        embeddings_token=_env(EMBEDDINGS_TOKEN_ENV),
        checkpoint=_env(CHECKPOINT_ENV),
        output_dir=_env(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR,
    )


__all__ = [
    "CHECKPOINT_ENV",
    "DB_URL_ENV",
    "EMBEDDINGS_TOKEN_ENV",
    "EMBEDDINGS_URL_ENV",
    "MAX_EMBED_TRAJECTORIES",
    "OUTPUT_DIR_ENV",
    "Settings",
    "get_settings",
]
