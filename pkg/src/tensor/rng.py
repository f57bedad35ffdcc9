"""Named, seeded random streams.

A stream is identified by ``(seed, label)``; the label is hashed with sha256 so
the same pair yields the same sequence on every platform and Python version.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Sequence, Tuple, Union

import numpy as np

Shape = Union[int, Tuple[int, ...], None]


class Rng:
    """Deterministic random stream derived from a 64-bit seed and a label."""

    def __init__(self, seed: int, label: str = "") -> None:
        self.seed = int(seed)
        self.label = label
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        entropy = [self.seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "little")]
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def child(self, label: str) -> "Rng":
        """Independent stream for a sub-component, e.g. ``rng.child("block0")``."""

        return Rng(self.seed, f"{self.label}/{label}" if self.label else label)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: Shape = None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size: Shape = None) -> np.ndarray:
        return self.generator.normal(loc, scale, size)

    def integers(self, low: int, high: Optional[int] = None, size: Shape = None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def choice(self, options: Sequence, p: Optional[Sequence[float]] = None):
        index = self.generator.choice(len(options), p=p)
        return options[int(index)]

    def random(self) -> float:
        return float(self.generator.random())

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, label={self.label!r})"


__all__ = ["Rng"]
