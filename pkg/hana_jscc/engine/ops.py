"""Primitive differentiable operations"""

import math
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionError, NumericDomainError
from .tensor import Function, Tensor, unbroadcast

Grads = Tuple[Optional[np.ndarray], ...]

GELU_COEF = math.sqrt(2.0 / math.pi)
GELU_CUBIC = 0.044715


def _broadcast_shape(op: str, a: np.ndarray, b: np.ndarray) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(op, a.shape, b.shape)


class Add(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape("add", a, b)
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad: np.ndarray) -> Grads:
        shape_a, shape_b = self.shapes
        return (
            unbroadcast(grad, shape_a) if self.needs_grad[0] else None,
            unbroadcast(grad, shape_b) if self.needs_grad[1] else None,
        )


class Sub(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape("sub", a, b)
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad: np.ndarray) -> Grads:
        shape_a, shape_b = self.shapes
        return (
            unbroadcast(grad, shape_a) if self.needs_grad[0] else None,
            unbroadcast(-grad, shape_b) if self.needs_grad[1] else None,
        )


class Mul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape("mul", a, b)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: np.ndarray) -> Grads:
        return (
            unbroadcast(grad * self.b, self.a.shape) if self.needs_grad[0] else None,
            unbroadcast(grad * self.a, self.b.shape) if self.needs_grad[1] else None,
        )


class Scale(Function):
    def forward(self, a: np.ndarray, factor: float) -> np.ndarray:
        self.factor = factor
        return a * a.dtype.type(factor)

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * grad.dtype.type(self.factor),)


class Pow(Function):
    def forward(self, a: np.ndarray, exponent: float) -> np.ndarray:
        if exponent < 0 and np.any(a == 0):
            raise NumericDomainError(f"pow: zero raised to negative exponent {exponent}")
        if not float(exponent).is_integer() and np.any(a < 0):
            raise NumericDomainError(f"pow: negative base with fractional exponent {exponent}")

        self.a = a
        self.exponent = exponent
        self.out = np.power(a, exponent)
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.exponent * np.power(self.a, self.exponent - 1),)


class MatMul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise DimensionError("matmul", a.shape, b.shape)

        try:
            np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
        except ValueError:
            raise DimensionError("matmul", a.shape, b.shape)

        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad: np.ndarray) -> Grads:
        grad_a = grad_b = None
        if self.needs_grad[0]:
            grad_a = unbroadcast(np.matmul(grad, np.swapaxes(self.b, -1, -2)), self.a.shape)
        if self.needs_grad[1]:
            grad_b = unbroadcast(np.matmul(np.swapaxes(self.a, -1, -2), grad), self.b.shape)
        return grad_a, grad_b


class Relu(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.mask = a > 0
        return np.where(self.mask, a, 0).astype(a.dtype)

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.mask,)


class Gelu(Function):
    """tanh approximation of GELU."""

    def forward(self, a: np.ndarray) -> np.ndarray:
        self.a = a
        self.t = np.tanh(GELU_COEF * (a + GELU_CUBIC * a**3))
        return 0.5 * a * (1.0 + self.t)

    def backward(self, grad: np.ndarray) -> Grads:
        a, t = self.a, self.t
        du = GELU_COEF * (1.0 + 3.0 * GELU_CUBIC * a**2)
        return (grad * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t**2) * du),)


class Sigmoid(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        self.out = 0.5 * (1.0 + np.tanh(0.5 * a))
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.out * (1.0 - self.out),)


class Exp(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            out = np.exp(a)
        if np.any(np.isinf(out) & np.isfinite(a)):
            raise NumericDomainError(f"exp overflow for input up to {np.max(a)}")
        self.out = out
        return out

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.out,)


class Log(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        if np.any(a <= 0):
            raise NumericDomainError(f"log of non-positive value {np.min(a)}")
        self.a = a
        return np.log(a)

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad / self.a,)


class Abs(Function):
    def forward(self, a: np.ndarray) -> np.ndarray:
        # np.sign is 0 at 0, the subgradient convention for L1
        self.sign = np.sign(a)
        return np.abs(a)

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad * self.sign,)


class Sum(Function):
    def forward(
        self,
        a: np.ndarray,
        axis: Optional[Union[int, Tuple[int, ...]]] = None,
        keepdims: bool = False,
    ) -> np.ndarray:
        self.shape = a.shape
        self.axis = axis
        self.keepdims = keepdims
        return np.asarray(np.sum(a, axis=axis, keepdims=keepdims))

    def backward(self, grad: np.ndarray) -> Grads:
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, a: np.ndarray, shape: Sequence[int]) -> np.ndarray:
        self.shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError:
            raise DimensionError("reshape", a.shape, tuple(shape))

    def backward(self, grad: np.ndarray) -> Grads:
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, a: np.ndarray, axes: Optional[Sequence[int]] = None) -> np.ndarray:
        self.axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad: np.ndarray) -> Grads:
        return (np.transpose(grad, np.argsort(self.axes)),)


class GetItem(Function):
    def forward(self, a: np.ndarray, index: Any) -> np.ndarray:
        self.shape = a.shape
        self.dtype = a.dtype
        self.index = index
        return np.array(a[index], copy=True)

    def backward(self, grad: np.ndarray) -> Grads:
        out = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays: np.ndarray, axis: int = 0) -> np.ndarray:
        try:
            out = np.concatenate(arrays, axis=axis)
        except ValueError:
            raise DimensionError("concat", *(array.shape for array in arrays))
        self.axis = axis
        self.splits = np.cumsum([array.shape[axis] for array in arrays])[:-1]
        return out

    def backward(self, grad: np.ndarray) -> Grads:
        pieces = np.split(grad, self.splits, axis=self.axis)
        return tuple(
            piece if needed else None for piece, needed in zip(pieces, self.needs_grad)
        )


class Softmax(Function):
    def forward(self, a: np.ndarray, axis: int = -1) -> np.ndarray:
        shifted = a - np.max(a, axis=axis, keepdims=True)
        exps = np.exp(shifted)
        self.axis = axis
        self.out = exps / np.sum(exps, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        inner = np.sum(grad * self.out, axis=self.axis, keepdims=True)
        return (self.out * (grad - inner),)


class LogSoftmax(Function):
    def forward(self, a: np.ndarray, axis: int = -1) -> np.ndarray:
        shifted = a - np.max(a, axis=axis, keepdims=True)
        self.axis = axis
        self.out = shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
        return self.out

    def backward(self, grad: np.ndarray) -> Grads:
        total = np.sum(grad, axis=self.axis, keepdims=True)
        return (grad - np.exp(self.out) * total,)


class LayerNorm(Function):
    """Normalization over the last axis followed by a per-feature affine map."""

    def forward(
        self, x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-5
    ) -> np.ndarray:
        if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
            raise DimensionError("layer_norm", x.shape, gain.shape, bias.shape)

        mean = np.mean(x, axis=-1, keepdims=True)
        centered = x - mean
        var = np.mean(centered**2, axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.x_hat = centered * self.inv_std
        self.gain = gain
        return self.x_hat * gain + bias

    def backward(self, grad: np.ndarray) -> Grads:
        x_hat = self.x_hat
        width = x_hat.shape[-1]
        lead_axes = tuple(range(grad.ndim - 1))

        grad_x = None
        if self.needs_grad[0]:
            d_hat = grad * self.gain
            grad_x = (self.inv_std / width) * (
                width * d_hat
                - np.sum(d_hat, axis=-1, keepdims=True)
                - x_hat * np.sum(d_hat * x_hat, axis=-1, keepdims=True)
            )

        grad_gain = np.sum(grad * x_hat, axis=lead_axes) if self.needs_grad[1] else None
        grad_bias = np.sum(grad, axis=lead_axes) if self.needs_grad[2] else None
        return grad_x, grad_gain, grad_bias


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)
