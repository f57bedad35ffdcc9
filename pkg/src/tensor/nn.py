"""Parameter containers and reusable layers."""

from __future__ import annotations

import math
from typing import ClassVar, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError, DimensionError, EntityIndexError
from . import functional as F
from .autograd import Tensor, get_default_dtype, getitem
from .rng import Rng


class Parameter(Tensor):
    """A trainable leaf tensor with a model-unique name."""

    def __init__(self, data, name: str = "") -> None:
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype})"


class Module:
    """Base class walking attributes to enumerate named parameters.

    Parameters are named by their attribute path (``norm.gain``); lists of
    sub-modules are numbered, using ``_list_names`` to pick the stem, so
    ``blocks`` can become ``block0``, ``block1``.
    """

    _list_names: ClassVar[Dict[str, str]] = {}

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            if isinstance(value, Parameter):
                yield f"{prefix}{attr}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{attr}.")
            elif isinstance(value, (list, tuple)) and value and all(
                isinstance(item, Module) for item in value
            ):
                stem = self._list_names.get(attr, f"{attr}.")
                for index, item in enumerate(value):
                    yield from item.named_parameters(f"{prefix}{stem}{index}.")

    def parameters(self) -> List[Parameter]:
        return [param for _, param in self.named_parameters()]

    def assign_names(self, prefix: str = "") -> None:
        """Stamp each parameter with its path and check uniqueness."""

        seen = set()
        for name, param in self.named_parameters(prefix):
            if name in seen:
                raise ConfigurationError(f"duplicate parameter name {name!r}")
            seen.add(name)
            param.name = name

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {name: param.data for name, param in self.named_parameters(prefix)}

    def load_state_dict(self, tensors: Mapping[str, np.ndarray], prefix: str = "") -> None:
        """Copy values in by name; every parameter must be present with its shape."""

        for name, param in self.named_parameters(prefix):
            if name not in tensors:
                raise ConfigurationError(f"checkpoint is missing parameter {name!r}")
            value = np.asarray(tensors[name])
            if value.shape != param.shape:
                raise DimensionError(
                    f"parameter {name!r}: checkpoint shape {value.shape} != model shape {param.shape}"
                )
            param.data = value.astype(param.dtype, copy=True)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.grad = None

    def num_parameters(self) -> int:
        return sum(param.size for param in self.parameters())


def _uniform_fan_in(rng: Rng, fan_in: int, shape) -> np.ndarray:
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, shape).astype(get_default_dtype())


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: Rng, bias: bool = True) -> None:
        self.weight = Parameter(_uniform_fan_in(rng.child("weight"), in_features, (in_features, out_features)))
        self.bias = (
            Parameter(_uniform_fan_in(rng.child("bias"), in_features, (out_features,))) if bias else None
        )

    def __call__(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)

    @property
    def pair(self) -> Tuple[Parameter, Optional[Parameter]]:
        return self.weight, self.bias


class Embedding(Module):
    """Index-fetch table initialised from ``normal(0, 0.02)``."""

    def __init__(self, count: int, width: int, rng: Rng) -> None:
        self.table = Parameter(rng.normal(0.0, 0.02, (count, width)).astype(get_default_dtype()))

    def __call__(self, ids: np.ndarray) -> Tensor:
        ids = np.asarray(ids, dtype=np.int64)
        count = self.table.shape[0]
        if ids.size and (ids.min() < 0 or ids.max() >= count):
            raise EntityIndexError(f"entity id out of range [0, {count})")
        return getitem(self.table, ids)


class FourierEncoding(Module):
    """Learnable Fourier features: ``freqs ~ normal(0, 1)``, ``phases = 0``."""

    def __init__(self, num_freqs: int, rng: Rng) -> None:
        if num_freqs < 1:
            raise ConfigurationError("Fourier encoding needs at least one frequency")
        self.freqs = Parameter(rng.normal(0.0, 1.0, (num_freqs,)).astype(get_default_dtype()))
        self.phases = Parameter(np.zeros(num_freqs, dtype=get_default_dtype()))

    def __call__(self, x: Tensor) -> Tensor:
        return F.fourier_encode(x, self.freqs, self.phases)


class RMSNorm(Module):
    def __init__(self, width: int) -> None:
        self.gain = Parameter(np.ones(width, dtype=get_default_dtype()))

    def __call__(self, x: Tensor) -> Tensor:
        return F.rmsnorm(x, self.gain)


class LayerNorm(Module):
    def __init__(self, width: int) -> None:
        self.gain = Parameter(np.ones(width, dtype=get_default_dtype()))
        self.bias = Parameter(np.zeros(width, dtype=get_default_dtype()))

    def __call__(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.gain, self.bias)


class MultiHeadSelfAttention(Module):
    def __init__(self, width: int, num_heads: int, rng: Rng) -> None:
        if width % num_heads:
            raise ConfigurationError(f"width {width} is not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.query = Linear(width, width, rng.child("query"))
        self.key = Linear(width, width, rng.child("key"))
        self.value = Linear(width, width, rng.child("value"))
        self.output = Linear(width, width, rng.child("output"))

    def __call__(self, x: Tensor, key_mask: Optional[np.ndarray] = None, return_weights: bool = False):
        return F.multi_head_self_attention(
            x,
            self.query.pair,
            self.key.pair,
            self.value.pair,
            self.output.pair,
            self.num_heads,
            key_mask=key_mask,
            return_weights=return_weights,
        )


class TransformerEncoderLayer(Module):
    """Pre-norm encoder layer: attention and a ``4 x`` feed-forward, both residual."""

    def __init__(self, width: int, num_heads: int, rng: Rng, ff_mult: int = 4) -> None:
        self.attn_norm = LayerNorm(width)
        self.attention = MultiHeadSelfAttention(width, num_heads, rng.child("attention"))
        self.ff_norm = LayerNorm(width)
        self.ff_in = Linear(width, ff_mult * width, rng.child("ff_in"))
        self.ff_out = Linear(ff_mult * width, width, rng.child("ff_out"))

    def __call__(self, x: Tensor, key_mask: Optional[np.ndarray] = None) -> Tensor:
        x = x + self.attention(self.attn_norm(x), key_mask=key_mask)
        return x + self.ff_out(F.silu(self.ff_in(self.ff_norm(x))))


__all__ = [
    "Embedding",
    "FourierEncoding",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadSelfAttention",
    "Parameter",
    "RMSNorm",
    "TransformerEncoderLayer",
]
