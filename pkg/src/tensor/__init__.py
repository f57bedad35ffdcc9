"""Minimal tensor library: autograd tape, layers, Adam and checkpoints."""

from .autograd import Tensor, get_default_dtype, no_grad, precision, set_precision
from .checkpoint import load_tensors, save_tensors
from .nn import Module, Parameter
from .optim import Adam, adam_step
from .rng import Rng

__all__ = [
    "Adam",
    "Module",
    "Parameter",
    "Rng",
    "Tensor",
    "adam_step",
    "get_default_dtype",
    "load_tensors",
    "no_grad",
    "precision",
    "save_tensors",
    "set_precision",
]
