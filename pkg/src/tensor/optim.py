"""Adam optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from ..errors import DimensionError
from .nn import Parameter

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First/second moment estimates keyed by parameter name, plus the step count."""

    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[Optional[np.ndarray]],
    state: AdamState,
    lr: float,
    beta1: float = BETA1,
    beta2: float = BETA2,
    eps: float = EPSILON,
) -> AdamState:
    """Apply one Adam update in place; parameters with no gradient are left alone."""

    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for param, grad in zip(params, grads):
        if grad is None:
            continue
        if grad.shape != param.shape:
            raise DimensionError(
                f"gradient for {param.name!r} has shape {grad.shape}, expected {param.shape}"
            )
        m = state.m.get(param.name)
        v = state.v.get(param.name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        elif m.shape != param.shape:
            raise DimensionError(f"optimizer state for {param.name!r} does not match its parameter")
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        state.m[param.name] = m.astype(param.dtype)
        state.v[param.name] = v.astype(param.dtype)
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        param.data = (param.data - update).astype(param.dtype)
    return state


class Adam:
    """Owns a parameter list and its moment state for the duration of training."""

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-3) -> None:
        self.params = list(params)
        self.lr = lr
        self.state = AdamState()

    def zero_grad(self) -> None:
        for param in self.params:
            param.grad = None

    def step(self) -> None:
        adam_step(self.params, [param.grad for param in self.params], self.state, self.lr)

    def state_tensors(self) -> Dict[str, np.ndarray]:
        """Moments as checkpoint entries ``adam.m.<name>`` / ``adam.v.<name>``."""

        tensors: Dict[str, np.ndarray] = {}
        for name, value in self.state.m.items():
            tensors[f"adam.m.{name}"] = value
        for name, value in self.state.v.items():
            tensors[f"adam.v.{name}"] = value
        return tensors

    def load_state_tensors(self, tensors: Mapping[str, np.ndarray], step: int) -> None:
        self.state = AdamState(step=int(step))
        for key, value in tensors.items():
            if key.startswith("adam.m."):
                self.state.m[key[len("adam.m.") :]] = np.array(value, copy=True)
            elif key.startswith("adam.v."):
                self.state.v[key[len("adam.v.") :]] = np.array(value, copy=True)


__all__ = ["Adam", "AdamState", "adam_step"]
