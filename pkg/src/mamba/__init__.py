"""Selective state-space trajectory encoder."""

from .block import TrajMambaBlock, block_forward, discretize, parameterize_movement
from .model import ModelDims, TrajMambaModel, encode, encode_many
from .scan import SsmInputs, selective_scan, traj_ssm_blocked, traj_ssm_reference

__all__ = [
    "ModelDims",
    "SsmInputs",
    "TrajMambaBlock",
    "TrajMambaModel",
    "block_forward",
    "discretize",
    "encode",
    "encode_many",
    "parameterize_movement",
    "selective_scan",
    "traj_ssm_blocked",
    "traj_ssm_reference",
]
