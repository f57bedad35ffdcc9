"""Filesystem helpers: atomic writes and JSON persistence."""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Iterator, Union

PathLike = Union[str, Path]


@contextmanager
def atomic_write(path: PathLike, mode: str = "w") -> Iterator[IO[Any]]:
    """Write to a temporary sibling file and rename it over ``path`` on success."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent))
    binary = "b" in mode
    try:
        with os.fdopen(handle, mode, **({} if binary else {"encoding": "utf-8", "newline": ""})) as file_obj:
            yield file_obj
            file_obj.flush()
            os.fsync(file_obj.fileno())
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def write_json(path: PathLike, payload: Any) -> Path:
    """Persist ``payload`` as indented UTF-8 JSON, atomically."""

    with atomic_write(path) as file_obj:
        json.dump(payload, file_obj, ensure_ascii=False, indent=2, sort_keys=True)
        file_obj.write("\n")
    return Path(path)


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as file_obj:
        return json.load(file_obj)


def ensure_directory(path: PathLike) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


__all__ = ["atomic_write", "ensure_directory", "read_json", "write_json"]
