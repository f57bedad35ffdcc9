"""HTTP routers of the embedding service.

Every public module in this package exposes ``register_routes(app)``;
``register_routers`` finds them so the app factory never lists routers by hand.
"""

from __future__ import annotations

import logging
from importlib import import_module
from pkgutil import iter_modules
from types import ModuleType
from typing import Iterator

from fastapi import FastAPI

logger = logging.getLogger(__name__)


def router_modules() -> Iterator[ModuleType]:
    for info in sorted(iter_modules(__path__), key=lambda item: item.name):
        if info.ispkg or info.name.startswith("_"):
            continue
        yield import_module(f"{__name__}.{info.name}")


def register_routers(app: FastAPI) -> None:
    """Call ``register_routes`` of each router module in name order."""

    for module in router_modules():
        register = getattr(module, "register_routes", None)
        if register is None:
            raise AttributeError(f"{module.__name__} does not define register_routes(app)")
        register(app)
        logger.debug("Registered routes from %s", module.__name__)


__all__ = ["register_routers", "router_modules"]
