"""Filesystem helpers shared by the writers of every artifact."""

from .filesystem import atomic_write, ensure_directory, read_json, write_json

__all__ = ["atomic_write", "ensure_directory", "read_json", "write_json"]
