"""Self-contained reverse-mode automatic differentiation engine"""

from .functional import (
    AttentionWeights,
    ElementwiseKind,
    concat,
    elementwise,
    layer_norm,
    linear,
    log_softmax,
    matmul,
    multi_head_attention,
    softmax,
)
from .gradcheck import GradCheckReport, grad_check
from .tensor import ComputeGraph, Function, Tensor, as_tensor, backward, no_grad

__all__ = [
    "AttentionWeights",
    "ComputeGraph",
    "ElementwiseKind",
    "Function",
    "GradCheckReport",
    "Tensor",
    "as_tensor",
    "backward",
    "concat",
    "elementwise",
    "grad_check",
    "layer_norm",
    "linear",
    "log_softmax",
    "matmul",
    "multi_head_attention",
    "no_grad",
    "softmax",
]
