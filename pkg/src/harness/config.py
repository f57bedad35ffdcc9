"""Run configuration loading: JSON file first, then ``--set key=value`` overrides."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from ..errors import ConfigurationError, UsageError
from ..models import RunConfig

logger = logging.getLogger(__name__)


def parse_override(item: str) -> Tuple[str, Any]:
    """``key=value`` with the value read as JSON, else kept as the raw string."""

    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise UsageError(f"override {item!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(part) for part in error.get("loc", ())) or "config"
        parts.append(f"{location}: {error.get('msg')}")
    return "; ".join(parts)


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
) -> RunConfig:
    """Merge the JSON document at ``path`` with overrides and validate the result."""

    document: Dict[str, Any] = {}
    if path is not None:
        source = Path(path)
        if not source.exists():
            raise ConfigurationError(f"config file not found: {source}")
        try:
            document = json.loads(source.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{source}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(document, dict):
            raise ConfigurationError(f"{source}: top level must be a JSON object")
    for item in overrides:
        key, value = parse_override(item)
        logger.debug("override %s=%r", key, value)
        document[key] = value
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid configuration: {_format_validation(exc)}") from exc


__all__ = ["load_run_config", "parse_override"]
