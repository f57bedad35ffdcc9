"""Entry point: ``python main.py <command>`` runs the CLI; ``main:app`` is the ASGI app."""

from __future__ import annotations

from app.main import app, create_app
from src.cli import main

__all__ = ["app", "create_app", "main"]


if __name__ == "__main__":
    main()
