from .gradcheck import GradCheckReport, grad_check
from .layers import ACTIVATIONS, MLP, Dense, dense_forward
from .losses import (
    LOG_FLOOR,
    cross_entropy,
    cross_entropy_from_labels,
    one_hot,
    softmax,
    squared_error,
)
from .optim import Adam, Sgd
from .serialize import ContainerError, load_tensors, save_tensors
from .tape import Tape

__all__ = [
    "ACTIVATIONS",
    "Adam",
    "ContainerError",
    "Dense",
    "GradCheckReport",
    "LOG_FLOOR",
    "MLP",
    "Sgd",
    "Tape",
    "cross_entropy",
    "cross_entropy_from_labels",
    "dense_forward",
    "grad_check",
    "load_tensors",
    "one_hot",
    "save_tensors",
    "softmax",
    "squared_error",
]
