"""Prediction heads for the downstream regression tasks."""

from __future__ import annotations

from ..tensor import functional as F
from ..tensor.autograd import Tensor
from ..tensor.nn import Linear, Module
from ..tensor.rng import Rng

OUTPUT_DIMS = {"destination": 2, "arrival_time": 1}


class TaskHead(Module):
    """``Linear(SiLU(Linear(z)))`` with a hidden width equal to the embedding width."""

    def __init__(self, embed_dim: int, output_dim: int, rng: Rng) -> None:
        self.hidden = Linear(embed_dim, embed_dim, rng.child("hidden"))
        self.output = Linear(embed_dim, output_dim, rng.child("output"))

    def __call__(self, z: Tensor) -> Tensor:
        return self.output(F.silu(self.hidden(z)))


__all__ = ["OUTPUT_DIMS", "TaskHead"]
