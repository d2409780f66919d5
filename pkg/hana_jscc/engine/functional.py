"""Functional API over the primitive operations"""

import enum
import math
from typing import NamedTuple, Optional, Sequence, Union

from ..errors import ConfigurationError
from . import ops
from .tensor import Tensor, as_tensor


@enum.unique
class ElementwiseKind(str, enum.Enum):
    """Elementwise operations exposed through `elementwise`."""

    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SCALE = "scale"
    RELU = "relu"
    GELU = "gelu"
    EXP = "exp"
    LOG = "log"


_UNARY = {
    ElementwiseKind.RELU: ops.Relu,
    ElementwiseKind.GELU: ops.Gelu,
    ElementwiseKind.EXP: ops.Exp,
    ElementwiseKind.LOG: ops.Log,
}

_BINARY = {
    ElementwiseKind.ADD: ops.Add,
    ElementwiseKind.SUB: ops.Sub,
    ElementwiseKind.MUL: ops.Mul,
}


def elementwise(
    kind: Union[ElementwiseKind, str],
    *inputs: Union[Tensor, float],
    factor: Optional[float] = None,
) -> Tensor:
    """Apply an elementwise operation by name.

    `scale` multiplies its single input by the constant `factor`.
    """
    kind = ElementwiseKind(kind)

    if kind == ElementwiseKind.SCALE:
        if factor is None or len(inputs) != 1:
            raise ConfigurationError("scale takes one tensor and a factor")
        return ops.Scale.apply(as_tensor(inputs[0]), factor=float(factor))

    if kind in _UNARY:
        if len(inputs) != 1:
            raise ConfigurationError(f"{kind.value} takes exactly one input")
        return _UNARY[kind].apply(as_tensor(inputs[0]))

    if len(inputs) != 2:
        raise ConfigurationError(f"{kind.value} takes exactly two inputs")

    first = as_tensor(inputs[0])
    second = as_tensor(inputs[1], first.dtype)
    return _BINARY[kind].apply(first, second)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return ops.MatMul.apply(a, b)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return ops.Softmax.apply(x, axis=axis)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    return ops.LogSoftmax.apply(x, axis=axis)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    if eps <= 0:
        raise ConfigurationError(f"layer_norm eps must be positive, got {eps}")
    return ops.LayerNorm.apply(x, gain, bias, eps=eps)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return ops.concat(tensors, axis=axis)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    out = ops.MatMul.apply(x, weight)
    if bias is not None:
        out = ops.Add.apply(out, bias)
    return out


class AttentionWeights(NamedTuple):
    """Projection parameters of one multi-head attention layer."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    b_q: Optional[Tensor] = None
    b_k: Optional[Tensor] = None
    b_v: Optional[Tensor] = None
    b_o: Optional[Tensor] = None


def _split_heads(x: Tensor, heads: int) -> Tensor:
    *lead, length, width = x.shape
    return x.reshape(*lead, length, heads, width // heads).swapaxes(-3, -2)


def _merge_heads(x: Tensor) -> Tensor:
    *lead, heads, length, head_width = x.shape
    return x.swapaxes(-3, -2).reshape(*lead, length, heads * head_width)


def multi_head_attention(
    q: Tensor, k: Tensor, v: Tensor, heads: int, weights: AttentionWeights
) -> Tensor:
    """Scaled dot-product attention over the last two axes (tokens, features).

    Leading axes are treated as batch. Per head the scores are
    softmax(Q K^T / sqrt(D / heads)); heads are concatenated and projected by
    `w_o`.
    """
    width = q.shape[-1]
    if heads <= 0 or width % heads != 0:
        raise ConfigurationError(
            f"attention width {width} is not divisible by {heads} heads"
        )

    query = _split_heads(linear(q, weights.w_q, weights.b_q), heads)
    key = _split_heads(linear(k, weights.w_k, weights.b_k), heads)
    value = _split_heads(linear(v, weights.w_v, weights.b_v), heads)

    scores = matmul(query, key.swapaxes(-1, -2)) * (1.0 / math.sqrt(width // heads))
    attended = matmul(softmax(scores, axis=-1), value)

    return linear(_merge_heads(attended), weights.w_o, weights.b_o)
