"""In-batch contrastive objective between trajectory embeddings and a view."""

from __future__ import annotations

import math
from typing import Union

import numpy as np

from ..errors import DimensionError, InputError
from ..tensor import functional as F
from ..tensor.autograd import Tensor, as_tensor, exp, get_default_dtype, matmul, swapaxes
from ..tensor.nn import Module, Parameter

INITIAL_LOG_TAU = math.log(1.0 / 0.07)


class Temperature(Module):
    """``tau = exp(log_tau)``; positive for any finite ``log_tau``."""

    def __init__(self, initial: float = INITIAL_LOG_TAU) -> None:
        self.log_tau = Parameter(np.array(initial, dtype=get_default_dtype()))

    def __call__(self) -> Tensor:
        return exp(self.log_tau)

    @property
    def value(self) -> float:
        return float(np.exp(self.log_tau.data))


def similarity_matrix(z: Tensor, v: Tensor) -> Tensor:
    """Raw dot products ``S[i, j] = z_i . v_j`` (no normalization)."""

    z, v = as_tensor(z), as_tensor(v)
    if z.ndim != 2 or v.ndim != 2 or z.shape != v.shape:
        raise DimensionError(f"similarity needs two equal [B, E] batches, got {z.shape} and {v.shape}")
    return matmul(z, swapaxes(v, 0, 1))


def info_nce(similarity: Tensor, tau: Union[Tensor, float]) -> Tensor:
    """``mean_i [logsumexp_j(S_ij / tau) - S_ii / tau]``; zero for a single row."""

    similarity = as_tensor(similarity)
    if similarity.ndim != 2 or similarity.shape[0] != similarity.shape[1]:
        raise DimensionError(f"InfoNCE expects a square similarity matrix, got {similarity.shape}")
    if not isinstance(tau, Tensor) and tau <= 0:
        raise InputError(f"temperature must be positive, got {tau}")
    logits = similarity / tau
    rows = np.arange(similarity.shape[0])
    return (F.logsumexp(logits, axis=1) - logits[rows, rows]).mean()


def alignment_accuracy(z: np.ndarray, v: np.ndarray) -> float:
    """Fraction of rows whose matched pair has the row-max similarity (ties count as misses)."""

    scores = np.asarray(z, dtype=np.float64) @ np.asarray(v, dtype=np.float64).T
    if scores.size == 0:
        return 0.0
    diagonal = np.diag(scores)
    off = scores.copy()
    np.fill_diagonal(off, -np.inf)
    return float(np.mean(diagonal > off.max(axis=1))) if len(scores) > 1 else 1.0


__all__ = ["INITIAL_LOG_TAU", "Temperature", "alignment_accuracy", "info_nce", "similarity_matrix"]
