"""Minimal reverse-mode neural-network engine on numpy arrays.

Every layer implements an explicit ``forward``/``backward`` pair and
exposes its trainable tensors as :class:`Param` objects, which keeps
the whole computation inspectable and finite-difference checkable.
"""

from .core import Layer, Param, Sequential
from .layers import (
    AttentionFusion,
    BiLSTM,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    Transpose,
)
from .losses import mse_loss, softmax, softmax_cross_entropy
from .optim import Adam, LrSchedule, Sgd
from .checkpoint import load_checkpoint, save_checkpoint, sha256_of_file
from .gradcheck import CoordinateCheck, finite_difference_check, max_rel_error

__all__ = [
    "Adam",
    "AttentionFusion",
    "BiLSTM",
    "Conv1D",
    "Conv2D",
    "CoordinateCheck",
    "Dense",
    "Dropout",
    "Flatten",
    "GlobalAvgPool",
    "Layer",
    "LrSchedule",
    "Param",
    "Sequential",
    "Sgd",
    "Transpose",
    "finite_difference_check",
    "load_checkpoint",
    "max_rel_error",
    "mse_loss",
    "save_checkpoint",
    "sha256_of_file",
    "softmax",
    "softmax_cross_entropy",
]
