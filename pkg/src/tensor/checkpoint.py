"""Named-tensor persistence shared by models, scalers, optimizer state and embedding tables.

A checkpoint is a directory holding ``manifest.json`` and ``tensors.bin``. The
manifest lists entries ``{name, dtype, shape, byte_offset, byte_len}`` in the
order their little-endian row-major bytes appear in ``tensors.bin``; free-form
metadata (config, epoch, optimizer step) sits next to the entries.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, FormatError
from ..utils.filesystem import atomic_write, ensure_directory, write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TENSORS_NAME = "tensors.bin"
FORMAT_VERSION = 1

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}
_TAGS = {np.dtype(np.float32): "f32", np.dtype(np.float64): "f64"}


def _dtype_tag(array: np.ndarray) -> str:
    try:
        return _TAGS[array.dtype]
    except KeyError as exc:
        raise FormatError(f"unsupported tensor dtype {array.dtype}") from exc


def save_tensors(
    directory: Union[str, Path],
    tensors: Mapping[str, np.ndarray],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write ``tensors`` (in mapping order) and ``metadata`` to ``directory``."""

    root = ensure_directory(directory)
    entries = []
    offset = 0
    with atomic_write(root / TENSORS_NAME, "wb") as blob:
        for name, value in tensors.items():
            array = np.asarray(value)
            tag = _dtype_tag(array)
            raw = np.ascontiguousarray(array, dtype=_DTYPES[tag]).tobytes(order="C")
            blob.write(raw)
            entries.append(
                {
                    "name": name,
                    "dtype": tag,
                    "shape": list(array.shape),
                    "byte_offset": offset,
                    "byte_len": len(raw),
                }
            )
            offset += len(raw)
    manifest = {"format": FORMAT_VERSION, "entries": entries, "metadata": metadata or {}}
    write_json(root / MANIFEST_NAME, manifest)
    logger.debug("Saved %d tensors (%d bytes) to %s", len(entries), offset, root)
    return root


def read_manifest(directory: Union[str, Path]) -> Dict[str, Any]:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise ConfigurationError(f"checkpoint manifest not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as file_obj:
            manifest = json.load(file_obj)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(manifest, dict) or not isinstance(manifest.get("entries"), list):
        raise FormatError(f"{path}: manifest must contain an 'entries' list")
    return manifest


def load_tensors(directory: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Read every tensor back bit-exactly, returning ``(tensors, metadata)``."""

    root = Path(directory)
    manifest = read_manifest(root)
    blob_path = root / TENSORS_NAME
    if not blob_path.exists():
        raise ConfigurationError(f"checkpoint tensor file not found: {blob_path}")
    blob = blob_path.read_bytes()
    tensors: Dict[str, np.ndarray] = {}
    for entry in manifest["entries"]:
        try:
            name = entry["name"]
            dtype = _DTYPES[entry["dtype"]]
            shape = tuple(int(extent) for extent in entry["shape"])
            start, length = int(entry["byte_offset"]), int(entry["byte_len"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed manifest entry {entry!r}") from exc
        expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if length != expected or start < 0 or start + length > len(blob):
            raise FormatError(f"entry {name!r}: byte range does not match shape {list(shape)}")
        if name in tensors:
            raise FormatError(f"duplicate tensor name {name!r}")
        values = np.frombuffer(blob, dtype=dtype, count=expected // dtype.itemsize, offset=start)
        tensors[name] = values.reshape(shape).astype(dtype.newbyteorder("="), copy=True)
    return tensors, dict(manifest.get("metadata") or {})


def select_prefix(tensors: Mapping[str, np.ndarray], prefix: str) -> Dict[str, np.ndarray]:
    """Entries under ``prefix`` with the prefix stripped."""

    return {name[len(prefix) :]: value for name, value in tensors.items() if name.startswith(prefix)}


__all__ = [
    "FORMAT_VERSION",
    "MANIFEST_NAME",
    "TENSORS_NAME",
    "load_tensors",
    "read_manifest",
    "save_tensors",
    "select_prefix",
]
