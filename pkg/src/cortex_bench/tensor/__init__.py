"""Minimal dense tensor library with reverse-mode autodiff."""
from ..errors import DimensionError
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .core import Tensor, default_dtype, get_default_dtype, no_grad, set_default_dtype, tensor
from .functional import (
    NormStateError,
    RunningStats,
    batch_norm,
    conv2d,
    conv_output_size,
    cross_entropy,
    global_avg_pool,
    group_norm,
    linear,
    log_softmax,
    maxpool2d,
    relu,
    softmax,
)
from .gradcheck import check_gradients, numerical_gradient, relative_error
from .optim import SGD, sgd_step

__all__ = [
    "Tensor", "tensor", "no_grad", "default_dtype", "get_default_dtype", "set_default_dtype",
    "DimensionError", "NormStateError", "RunningStats",
    "conv2d", "maxpool2d", "batch_norm", "group_norm", "relu", "linear", "global_avg_pool",
    "softmax", "log_softmax", "cross_entropy", "conv_output_size",
    "SGD", "sgd_step", "check_gradients", "numerical_gradient", "relative_error",
    "Checkpoint", "save_checkpoint", "load_checkpoint",
]
