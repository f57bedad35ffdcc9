"""Input-dependent linear state-space scan.

For every head ``j`` and channel ``p`` the recurrence is::

    h_i = a[i, j] * h_{i-1} + b[i, j, :] * x[i, j, p]
    y[i, j, p] = c[i, :] . h_i

with ``h_0 = 0``. Arrays are batched: ``a [B, n, H]``, ``b [B, n, H, N]``,
``c [B, n, N]``, ``x [B, n, H, P]`` and ``y [B, n, H, P]``; unbatched inputs
(without the leading ``B``) are accepted everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, InputError
from ..tensor.autograd import Tensor


@dataclass(frozen=True)
class SsmInputs:
    a_bar: np.ndarray
    b_bar: np.ndarray
    c: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        a, b, c, x = self.a_bar, self.b_bar, self.c, self.x
        if a.ndim == 2:
            a, b, c, x = a[None], b[None], c[None], x[None]
        if a.ndim != 3 or b.ndim != 4 or c.ndim != 3 or x.ndim != 4:
            raise DimensionError(
                f"scan expects a[B,n,H], b[B,n,H,N], c[B,n,N], x[B,n,H,P]; got "
                f"{self.a_bar.shape}, {self.b_bar.shape}, {self.c.shape}, {self.x.shape}"
            )
        batch, steps, heads = a.shape
        state = c.shape[-1]
        if b.shape != (batch, steps, heads, state) or c.shape[:2] != (batch, steps) or x.shape[:3] != (batch, steps, heads):
            raise DimensionError(
                f"scan operand shapes disagree: a{a.shape} b{b.shape} c{c.shape} x{x.shape}"
            )

    @property
    def batched(self) -> bool:
        return self.a_bar.ndim == 3

    def as_batched(self) -> "SsmInputs":
        if self.batched:
            return self
        return SsmInputs(self.a_bar[None], self.b_bar[None], self.c[None], self.x[None])


def _finish(inputs: SsmInputs, y: np.ndarray) -> np.ndarray:
    return y if inputs.batched else y[0]


def _states(inputs: SsmInputs) -> np.ndarray:
    """All hidden states ``[B, n, H, P, N]`` by the sequential recurrence."""

    a, b, x = inputs.a_bar, inputs.b_bar, inputs.x
    batch, steps, heads, channels = x.shape
    states = np.empty((batch, steps, heads, channels, b.shape[-1]), dtype=x.dtype)
    h = np.zeros((batch, heads, channels, b.shape[-1]), dtype=x.dtype)
    for i in range(steps):
        h = a[:, i, :, None, None] * h + x[:, i, :, :, None] * b[:, i, :, None, :]
        states[:, i] = h
    return states


def traj_ssm_reference(inputs: SsmInputs) -> np.ndarray:
    """Step-by-step recurrence; the definition every faster path is checked against."""

    batched = inputs.as_batched()
    a, b, c, x = batched.a_bar, batched.b_bar, batched.c, batched.x
    batch, steps, heads, channels = x.shape
    y = np.empty_like(x)
    h = np.zeros((batch, heads, channels, b.shape[-1]), dtype=x.dtype)
    for i in range(steps):
        h = a[:, i, :, None, None] * h + x[:, i, :, :, None] * b[:, i, :, None, :]
        y[:, i] = np.einsum("bhpn,bn->bhp", h, c[:, i])
    return _finish(inputs, y)


def traj_ssm_blocked(inputs: SsmInputs, chunk: int) -> np.ndarray:
    """Chunked scan: dense work inside each chunk, state carried between chunks.

    Inside a chunk the decay from step ``k`` to step ``i`` is
    ``exp(L_i - L_k)`` with ``L`` the running sum of ``log a``; only ``k <= i``
    terms are kept, so every exponent is non-positive.
    """

    if chunk < 1:
        raise InputError(f"chunk size must be >= 1, got {chunk}")
    if chunk == 1:
        return traj_ssm_reference(inputs)
    batched = inputs.as_batched()
    a, b, c, x = batched.a_bar, batched.b_bar, batched.c, batched.x
    batch, steps, heads, channels = x.shape
    dtype = x.dtype
    tiny = np.finfo(dtype).tiny
    log_a = np.log(np.maximum(a, tiny))
    y = np.empty_like(x)
    h = np.zeros((batch, heads, channels, b.shape[-1]), dtype=dtype)
    for start in range(0, steps, chunk):
        stop = min(start + chunk, steps)
        q = stop - start
        cum = np.cumsum(log_a[:, start:stop], axis=1)  # [B, q, H]
        lower = np.tril(np.ones((q, q), dtype=bool))
        gaps = cum[:, :, None, :] - cum[:, None, :, :]  # [B, i, k, H]
        decay = np.exp(np.where(lower[None, :, :, None], gaps, -np.inf))
        cb = np.einsum("bin,bkhn->bikh", c[:, start:stop], b[:, start:stop])
        y_chunk = np.einsum("bikh,bkhp->bihp", cb * decay, x[:, start:stop])
        y_chunk += np.exp(cum)[..., None] * np.einsum("bin,bhpn->bihp", c[:, start:stop], h)
        y[:, start:stop] = y_chunk
        tail = np.exp(cum[:, -1:, :] - cum)  # [B, q, H]
        h = np.exp(cum[:, -1])[:, :, None, None] * h + np.einsum(
            "bkh,bkhn,bkhp->bhpn", tail, b[:, start:stop], x[:, start:stop]
        )
    return _finish(inputs, y.astype(dtype, copy=False))


def scan_backward(inputs: SsmInputs, grad_y: np.ndarray):
    """Adjoint recurrence run in reverse time over recomputed states.

    ``g_i = dy_i (x) c_i + a_{i+1} g_{i+1}`` is the gradient w.r.t. ``h_i``;
    parameter gradients are contractions of ``g`` with the forward quantities.
    """

    a, b, c, x = inputs.a_bar, inputs.b_bar, inputs.c, inputs.x
    states = _states(inputs)
    batch, steps, heads, channels = x.shape
    grad_a = np.zeros_like(a)
    grad_b = np.zeros_like(b)
    grad_c = np.zeros_like(c)
    grad_x = np.zeros_like(x)
    g = np.zeros((batch, heads, channels, b.shape[-1]), dtype=x.dtype)
    for i in range(steps - 1, -1, -1):
        if i + 1 < steps:
            g = a[:, i + 1, :, None, None] * g
        g = g + grad_y[:, i, :, :, None] * c[:, i, None, None, :]
        grad_c[:, i] = np.einsum("bhpn,bhp->bn", states[:, i], grad_y[:, i])
        if i > 0:
            grad_a[:, i] = np.einsum("bhpn,bhpn->bh", g, states[:, i - 1])
        grad_b[:, i] = np.einsum("bhpn,bhp->bhn", g, x[:, i])
        grad_x[:, i] = np.einsum("bhpn,bhn->bhp", g, b[:, i])
    return grad_a, grad_b, grad_c, grad_x


def selective_scan(a_bar: Tensor, b_bar: Tensor, c: Tensor, x: Tensor, chunk: int = 32) -> Tensor:
    """Differentiable scan: blocked forward, adjoint-recurrence backward."""

    inputs = SsmInputs(a_bar.data, b_bar.data, c.data, x.data)
    y = traj_ssm_blocked(inputs, chunk)
    unbatched = not inputs.batched

    def backward(grad: np.ndarray):
        batched = inputs.as_batched()
        grads = scan_backward(batched, grad[None] if unbatched else grad)
        if unbatched:
            grads = tuple(g[0] for g in grads)
        return grads

    return Tensor.from_op(y, (a_bar, b_bar, c, x), backward)


__all__ = [
    "SsmInputs",
    "scan_backward",
    "selective_scan",
    "traj_ssm_blocked",
    "traj_ssm_reference",
]
