"""Neural-network primitives built on the autograd tape."""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from ..errors import DimensionError
from .autograd import (
    Tensor,
    concat,
    cos,
    masked_fill,
    matmul,
    reshape,
    sin,
    swapaxes,
    transpose,
)

RMS_EPS = 1e-6
LAYER_NORM_EPS = 1e-5
MASK_FILL = -1e9


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight (+ bias)`` over the last axis of ``x``."""

    if x.shape[-1] != weight.shape[0]:
        raise DimensionError(
            f"linear: input shape {x.shape} does not match weight shape {weight.shape}"
        )
    out = matmul(x, weight)
    if bias is not None:
        out = out + bias
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = expit(x.data)
    return Tensor.from_op(s, (x,), lambda grad: (grad * s * (1.0 - s),))


def silu(x: Tensor) -> Tensor:
    s = expit(x.data)
    out = x.data * s

    def backward(grad: np.ndarray):
        return (grad * (s + x.data * s * (1.0 - s)),)

    return Tensor.from_op(out, (x,), backward)


def softplus(x: Tensor) -> Tensor:
    """``ln(1 + e^x)`` via ``max(x, 0) + ln(1 + e^-|x|)``, kept strictly positive."""

    data = x.data
    out = np.maximum(data, 0) + np.log1p(np.exp(-np.abs(data)))
    out = np.maximum(out, np.finfo(data.dtype).tiny)
    return Tensor.from_op(out, (x,), lambda grad: (grad * expit(data),))


def causal_conv1d(x: Tensor, kernels: Tensor) -> Tensor:
    """Depthwise causal convolution over the sequence axis (``-2``).

    ``kernels`` has shape ``[D, k]``; tap ``k - 1`` multiplies the current step
    and tap ``j`` the step ``k - 1 - j`` positions earlier.
    """

    channels, width = kernels.shape
    if x.shape[-1] != channels or width < 1:
        raise DimensionError(
            f"causal_conv1d: input shape {x.shape} does not match kernels {kernels.shape}"
        )
    steps = x.shape[-2]
    pad_shape = x.shape[:-2] + (width - 1, channels)
    padded = np.concatenate([np.zeros(pad_shape, dtype=x.dtype), x.data], axis=-2)
    out = np.zeros_like(x.data)
    for tap in range(width):
        out = out + padded[..., tap : tap + steps, :] * kernels.data[:, tap]

    def backward(grad: np.ndarray):
        grad_padded = np.zeros_like(padded)
        grad_kernels = np.zeros_like(kernels.data)
        lead = tuple(range(grad.ndim - 1))
        for tap in range(width):
            grad_padded[..., tap : tap + steps, :] += grad * kernels.data[:, tap]
            grad_kernels[:, tap] = (grad * padded[..., tap : tap + steps, :]).sum(axis=lead)
        return grad_padded[..., width - 1 :, :], grad_kernels

    return Tensor.from_op(out, (x, kernels), backward)


def fourier_encode(x: Tensor, freqs: Tensor, phases: Tensor) -> Tensor:
    """``[cos(x·f + φ), sin(x·f + φ)]`` for ``x`` of shape ``[..., 1]``."""

    argument = x * freqs + phases
    return concat([cos(argument), sin(argument)], axis=-1)


def rmsnorm(x: Tensor, gain: Tensor, eps: float = RMS_EPS) -> Tensor:
    mean_square = (x * x).mean(axis=-1, keepdims=True)
    return x * (mean_square + eps) ** -0.5 * gain


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    centred = x - x.mean(axis=-1, keepdims=True)
    variance = (centred * centred).mean(axis=-1, keepdims=True)
    return centred * (variance + eps) ** -0.5 * gain + bias


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    weights = np.exp(shifted)
    weights /= weights.sum(axis=axis, keepdims=True)

    def backward(grad: np.ndarray):
        return (weights * (grad - (grad * weights).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(weights, (x,), backward)


def logsumexp(x: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Row-wise log-sum-exp with a max shift."""

    peak = x.data.max(axis=axis, keepdims=True)
    exps = np.exp(x.data - peak)
    total = exps.sum(axis=axis, keepdims=True)
    out = peak + np.log(total)
    weights = exps / total
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def backward(grad: np.ndarray):
        if not keepdims:
            grad = np.expand_dims(grad, axis)
        return (grad * weights,)

    return Tensor.from_op(out, (x,), backward)


def split_heads(x: Tensor, num_heads: int) -> Tensor:
    """``[B, n, d] -> [B, heads, n, d / heads]``."""

    batch, steps, width = x.shape
    return transpose(reshape(x, (batch, steps, num_heads, width // num_heads)), (0, 2, 1, 3))


def merge_heads(x: Tensor) -> Tensor:
    batch, heads, steps, head_dim = x.shape
    return reshape(transpose(x, (0, 2, 1, 3)), (batch, steps, heads * head_dim))


def multi_head_self_attention(
    x: Tensor,
    query: Tuple[Tensor, Tensor],
    key: Tuple[Tensor, Tensor],
    value: Tuple[Tensor, Tensor],
    output: Tuple[Tensor, Tensor],
    num_heads: int,
    key_mask: Optional[np.ndarray] = None,
    return_weights: bool = False,
):
    """Full (non-causal) scaled dot-product attention.

    ``x`` is ``[n, d]`` or ``[B, n, d]``; each projection is a ``(weight, bias)``
    pair. ``key_mask`` (``[B, n]``, true for real tokens) hides padded keys.
    """

    unbatched = x.ndim == 2
    if unbatched:
        x = reshape(x, (1,) + x.shape)
    width = x.shape[-1]
    if width % num_heads:
        raise DimensionError(f"attention width {width} is not divisible by {num_heads} heads")
    q = split_heads(linear(x, *query), num_heads)
    k = split_heads(linear(x, *key), num_heads)
    v = split_heads(linear(x, *value), num_heads)
    scores = matmul(q, swapaxes(k, -1, -2)) * (1.0 / math.sqrt(width // num_heads))
    if key_mask is not None:
        scores = masked_fill(scores, ~np.asarray(key_mask, dtype=bool)[:, None, None, :], MASK_FILL)
    weights = softmax(scores, axis=-1)
    out = linear(merge_heads(matmul(weights, v)), *output)
    if unbatched:
        out = reshape(out, out.shape[1:])
    if return_weights:
        return out, weights
    return out


def sinusoidal_positions(length: int, width: int, dtype=np.float32) -> np.ndarray:
    """Fixed sine/cosine absolute positional table of shape ``[length, width]``."""

    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = np.exp(-math.log(10000.0) * (np.arange(0, width, 2, dtype=np.float64) / width))
    table = np.zeros((length, width), dtype=np.float64)
    table[:, 0::2] = np.sin(positions * rates)
    table[:, 1::2] = np.cos(positions * rates[: width // 2])
    return table.astype(dtype)


def masked_mean(x: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over the sequence axis of ``[B, n, d]`` counting only ``mask`` rows."""

    weights = np.asarray(mask, dtype=x.dtype)
    counts = np.maximum(weights.sum(axis=1, keepdims=True), 1.0)
    return (x * (weights / counts)[:, :, None]).sum(axis=1)


__all__ = [
    "causal_conv1d",
    "fourier_encode",
    "layer_norm",
    "linear",
    "logsumexp",
    "masked_mean",
    "merge_heads",
    "multi_head_self_attention",
    "rmsnorm",
    "sigmoid",
    "silu",
    "sinusoidal_positions",
    "softmax",
    "softplus",
    "split_heads",
]
