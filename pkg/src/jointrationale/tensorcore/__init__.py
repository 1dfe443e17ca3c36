from .errors import ContractError, DimensionError, NumericError, TapeReuseError
from .optim import OptimizerState, clip_grad_norm, optimizer_step
from .rng import Rng, rng_uniform
from .tensor import (
    Node,
    Tape,
    Tensor,
    add,
    backward,
    check_finite,
    embedding,
    gelu,
    layer_norm,
    matmul,
    mean_all,
    mul,
    paused,
    relu,
    reshape,
    scale,
    softmax,
    softmax_cross_entropy,
    sub,
    sum_all,
    transpose,
)

__all__ = [
    "ContractError",
    "DimensionError",
    "NumericError",
    "TapeReuseError",
    "OptimizerState",
    "clip_grad_norm",
    "optimizer_step",
    "Rng",
    "rng_uniform",
    "Node",
    "Tape",
    "Tensor",
    "add",
    "backward",
    "check_finite",
    "embedding",
    "gelu",
    "layer_norm",
    "matmul",
    "mean_all",
    "mul",
    "paused",
    "relu",
    "reshape",
    "scale",
    "softmax",
    "softmax_cross_entropy",
    "sub",
    "sum_all",
    "transpose",
]
