"""Exception hierarchy shared by every layer of the toolkit.

Each error carries the process exit code the CLI should return for it:
``2`` for data or configuration problems and ``1`` for usage problems.
"""

from __future__ import annotations

from typing import Optional


class TrajMambaError(Exception):
    """Base class for all domain errors raised by the toolkit."""

    exit_code: int = 2


class UsageError(TrajMambaError):
    """Raised for malformed command lines."""

    exit_code = 1


class DimensionError(TrajMambaError, ValueError):
    """Tensor operands whose shapes do not agree."""


class OrderingError(TrajMambaError, ValueError):
    """Timestamps that are not strictly increasing."""


class InputError(TrajMambaError, ValueError):
    """An input that violates an operation's precondition."""


class FitError(TrajMambaError, ValueError):
    """A statistic could not be fitted (for example on an empty split)."""


class FormatError(TrajMambaError, ValueError):
    """A file or payload does not follow its documented format."""


class ParseError(FormatError):
    """A malformed row in a text input, with its 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class ConfigurationError(TrajMambaError):
    """Missing files, unknown keys or inconsistent settings."""


class PreprocessingError(TrajMambaError):
    """A trajectory lacks the preprocessing a stage depends on."""

    def __init__(self, message: str, traj_id: Optional[int] = None) -> None:
        self.traj_id = traj_id
        super().__init__(message)


class GuardError(TrajMambaError, ValueError):
    """A metric was requested outside its domain (e.g. MAPE on zero targets)."""


class EntityIndexError(TrajMambaError, IndexError):
    """An entity id outside the range of its embedding table."""


class EmbeddingLookupError(TrajMambaError, KeyError):
    """A text-embedding key absent from a file-backed table."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class EmbeddingServiceError(TrajMambaError):
    """The remote text-embedding service failed after retries."""


__all__ = [
    "ConfigurationError",
    "DimensionError",
    "EmbeddingLookupError",
    "EmbeddingServiceError",
    "EntityIndexError",
    "FitError",
    "FormatError",
    "GuardError",
    "InputError",
    "OrderingError",
    "ParseError",
    "PreprocessingError",
    "TrajMambaError",
    "UsageError",
]
