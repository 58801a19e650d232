"""Minimal dense-tensor neural-network engine used by the classifier.

Tensors are float64 numpy arrays in channels-last layout (batch, time,
spatial, channel). Every layer implements an exact backward pass; the
finite-difference checker in gradcheck verifies them.
"""

from .layers import (
    AdaptiveMaxPool2d,
    Conv2d,
    Dense,
    Flatten,
    Layer,
    NumericError,
    Parameter,
    ReLU,
    SpatialGate,
)
from .loss import softmax_cross_entropy
from .optim import Adam
from .gradcheck import check_gradients, central_difference, max_relative_error
from .checkpoint import CHECKPOINT_MAGIC, load_checkpoint, save_checkpoint

__all__ = [
    "AdaptiveMaxPool2d",
    "Adam",
    "CHECKPOINT_MAGIC",
    "Conv2d",
    "Dense",
    "Flatten",
    "Layer",
    "NumericError",
    "Parameter",
    "ReLU",
    "SpatialGate",
    "central_difference",
    "check_gradients",
    "load_checkpoint",
    "max_relative_error",
    "save_checkpoint",
    "softmax_cross_entropy",
]
