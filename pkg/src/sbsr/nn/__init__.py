"""From-scratch dense CNN kernels: the tensor ops, the fixed four-stage network,
SGD, and the binary checkpoint format.

Everything here is pure numpy. Kernels are written batch-first ([b, c, h, w])
and accept single images ([c, h, w]) for convenience; float32 is the training
dtype, float64 is supported end to end for finite-difference gradient checks.
"""

from .layers import (
    ShapeError,
    conv2d_forward,
    conv2d_backward,
    maxpool_forward,
    maxpool_backward,
    relu,
    relu_backward,
    linear_forward,
    linear_backward,
)
from .network import (
    ConvStage,
    LinearStage,
    NetworkParams,
    ParamGrads,
    ForwardCache,
    NonFiniteGradientError,
    init_network,
    net_forward,
    net_backward,
    sgd_step,
    EMBEDDING_DIM,
    INPUT_SIZE,
    STAGE_SHAPES,
)
from .checkpoint import save_checkpoint, load_checkpoint, CheckpointError

__all__ = [
    "ShapeError",
    "conv2d_forward",
    "conv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "relu",
    "relu_backward",
    "linear_forward",
    "linear_backward",
    "ConvStage",
    "LinearStage",
    "NetworkParams",
    "ParamGrads",
    "ForwardCache",
    "NonFiniteGradientError",
    "init_network",
    "net_forward",
    "net_backward",
    "sgd_step",
    "EMBEDDING_DIM",
    "INPUT_SIZE",
    "STAGE_SHAPES",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointError",
]
