"""One encoder block: gated conv branch, movement-driven SSM parameters, scan."""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from ..errors import ConfigurationError
from ..tensor import functional as F
from ..tensor.autograd import Tensor, exp, get_default_dtype, reshape
from ..tensor.nn import Linear, Module, Parameter, RMSNorm
from ..tensor.rng import Rng
from .scan import selective_scan

CONV_WIDTH = 4
MOVEMENT_DIM = 3
DT_MIN = 1e-3
DT_MAX = 1e-1


def inverse_softplus(value: np.ndarray) -> np.ndarray:
    return value + np.log(-np.expm1(-value))


class TrajMambaBlock(Module):
    """Parameters of one block; layers never share them."""

    def __init__(
        self,
        embed_dim: int,
        inner_dim: int,
        state_dim: int,
        num_heads: int,
        rng: Rng,
        use_mb: bool = True,
        chunk_size: int = 32,
    ) -> None:
        if inner_dim % num_heads:
            raise ConfigurationError(f"inner dim {inner_dim} is not divisible by {num_heads} heads")
        dtype = get_default_dtype()
        self.state_dim = state_dim
        self.num_heads = num_heads
        self.use_mb = use_mb
        self.chunk_size = chunk_size
        self.in_proj = Linear(embed_dim, inner_dim, rng.child("in_proj"), bias=False)
        self.gate_proj = Linear(embed_dim, inner_dim, rng.child("gate_proj"), bias=False)
        bound = math.sqrt(1.0 / CONV_WIDTH)
        self.conv = Parameter(rng.child("conv").uniform(-bound, bound, (inner_dim, CONV_WIDTH)).astype(dtype))
        source_dim = MOVEMENT_DIM if use_mb else inner_dim
        self.mb_proj = Linear(source_dim, 2 * state_dim + num_heads, rng.child("mb_proj"), bias=False)
        dt = np.exp(
            rng.child("delta_bias").uniform(math.log(DT_MIN), math.log(DT_MAX), num_heads)
        )
        self.delta_bias = Parameter(inverse_softplus(dt).astype(dtype))
        self.a_log = Parameter(np.linspace(0.0, math.log(num_heads), num_heads).astype(dtype))
        self.norm = RMSNorm(inner_dim)
        self.out_proj = Linear(inner_dim, embed_dim, rng.child("out_proj"), bias=False)

    @property
    def head_dim(self) -> int:
        return self.norm.gain.shape[0] // self.num_heads

    def state_matrix(self) -> Tensor:
        """``A = -exp(a_log)``, strictly negative."""

        return -exp(self.a_log)

    def __call__(self, z_prev: Tensor, movement: np.ndarray) -> Tensor:
        return block_forward(z_prev, movement, self)


def block_input(z_prev: Tensor, block: TrajMambaBlock) -> Tensor:
    """``X = SiLU(CausalConv(Linear(Z)))``."""

    return F.silu(F.causal_conv1d(block.in_proj(z_prev), block.conv))


def _split_parameters(projected: Tensor, block: TrajMambaBlock) -> Tuple[Tensor, Tensor, Tensor]:
    n_state = block.state_dim
    b = projected[..., :n_state]
    c = projected[..., n_state : 2 * n_state]
    delta = F.softplus(projected[..., 2 * n_state :] + block.delta_bias)
    return b, c, delta


def parameterize_movement(movement, block: TrajMambaBlock) -> Tuple[Tensor, Tensor, Tensor]:
    """One linear map of the movement features into ``(B, C, delta)``; ``delta > 0``."""

    if not isinstance(movement, Tensor):
        movement = Tensor(np.asarray(movement, dtype=get_default_dtype()))
    return _split_parameters(block.mb_proj(movement), block)


def ablation_vanilla_parameterization(x: Tensor, block: TrajMambaBlock) -> Tuple[Tensor, Tensor, Tensor]:
    """Same split, but projected from the conv-branch output ``X`` (``D -> 2N + H``)."""

    return _split_parameters(block.mb_proj(x), block)


def discretize(a: Tensor, b: Tensor, delta: Tensor) -> Tuple[Tensor, Tensor]:
    """Zero-order hold: ``a_bar = exp(delta * A)``, ``b_bar = delta * B`` per head."""

    a_bar = exp(delta * a)
    b_bar = reshape(delta, delta.shape + (1,)) * reshape(b, b.shape[:-1] + (1, b.shape[-1]))
    return a_bar, b_bar


def block_forward(z_prev: Tensor, movement: np.ndarray, block: TrajMambaBlock) -> Tensor:
    """``Z_next = Linear(RMSNorm(Y * SiLU(Linear(Z_prev))))``."""

    x = block_input(z_prev, block)
    if block.use_mb:
        b, c, delta = parameterize_movement(movement, block)
    else:
        b, c, delta = ablation_vanilla_parameterization(x, block)
    a_bar, b_bar = discretize(block.state_matrix(), b, delta)
    heads = reshape(x, x.shape[:-1] + (block.num_heads, block.head_dim))
    y = selective_scan(a_bar, b_bar, c, heads, chunk=block.chunk_size)
    y = reshape(y, x.shape)
    gate = F.silu(block.gate_proj(z_prev))
    return block.out_proj(block.norm(y * gate))


__all__ = [
    "TrajMambaBlock",
    "ablation_vanilla_parameterization",
    "block_forward",
    "block_input",
    "discretize",
    "inverse_softplus",
    "parameterize_movement",
]
