"""Application factory for the embedding service."""

from __future__ import annotations

from typing import Final

from fastapi import FastAPI

from app.logging import configure_logging
from src.api import register_routers

APP_TITLE: Final[str] = "Trajectory Embedding API"
APP_VERSION: Final[str] = "0.1.0"


def create_app() -> FastAPI:
    """Construct the FastAPI application with every router under ``src.api``."""

    configure_logging()
    application = FastAPI(title=APP_TITLE, version=APP_VERSION)
    register_routers(application)
    return application


app = create_app()

__all__ = ["app", "create_app"]
