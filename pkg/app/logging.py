"""Logging set-up shared by the CLI and the HTTP service."""

from __future__ import annotations

import logging
from typing import Final, Optional

LOG_FORMAT: Final[str] = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
_DEFAULT_LEVEL = logging.INFO
# Third-party loggers that are chatty at DEBUG.
_QUIET_LOGGERS = ("urllib3", "httpx", "multipart")


def configure_logging(level: Optional[int] = None) -> None:
    """Install the root handler once; later calls only adjust the level."""

    level = level or _DEFAULT_LEVEL
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.INFO))


__all__ = ["LOG_FORMAT", "configure_logging"]
