"""Reverse-mode automatic differentiation over numpy arrays

A `Tensor` wraps a numpy array. Every differentiable operation is a
`Function` subclass whose `apply` runs the forward pass and records itself as
the creator of the output, so the graph is built as a side effect of normal
evaluation. `backward` walks that graph once in reverse topological order.
"""

import contextlib
import contextvars
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ContractError

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]

_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "grad_enabled", default=True
)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording a graph (evaluation, frozen teacher)."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if grad.shape == shape:
        return grad

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)

    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)

    return grad


class Function:
    """Base class for differentiable operations.

    Subclasses implement `forward` on raw arrays and `backward`, which maps
    the gradient of the output to one gradient per parent (or None when the
    parent does not need one).
    """

    def __init__(self, *parents: "Tensor"):
        self.parents = parents
        self.needs_grad = tuple(parent.requires_grad for parent in parents)

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no forward pass")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__} has no backward pass")

    @classmethod
    def apply(cls, *tensors: "Tensor", **kwargs: Any) -> "Tensor":
        func = cls(*tensors)
        out_data = func.forward(*(tensor.data for tensor in tensors), **kwargs)

        requires_grad = is_grad_enabled() and any(func.needs_grad)
        return Tensor(
            out_data,
            requires_grad=requires_grad,
            _ctx=func if requires_grad else None,
        )


class Tensor:
    """Real multi-dimensional array participating in reverse-mode differentiation."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[np.dtype] = None,
        _ctx: Optional[Function] = None,
    ):
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)

        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._ctx = _ctx
        self._consumed = False

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    # --- operators --- #

    def __add__(self, other: Any) -> "Tensor":
        return ops.Add.apply(self, as_tensor(other, self.dtype))

    def __radd__(self, other: Any) -> "Tensor":
        return ops.Add.apply(as_tensor(other, self.dtype), self)

    def __sub__(self, other: Any) -> "Tensor":
        return ops.Sub.apply(self, as_tensor(other, self.dtype))

    def __rsub__(self, other: Any) -> "Tensor":
        return ops.Sub.apply(as_tensor(other, self.dtype), self)

    def __mul__(self, other: Any) -> "Tensor":
        if isinstance(other, (int, float)):
            return ops.Scale.apply(self, factor=float(other))
        return ops.Mul.apply(self, as_tensor(other, self.dtype))

    def __rmul__(self, other: Any) -> "Tensor":
        return self.__mul__(other)

    def __truediv__(self, other: Any) -> "Tensor":
        if isinstance(other, (int, float)):
            return ops.Scale.apply(self, factor=1.0 / float(other))
        return ops.Mul.apply(self, ops.Pow.apply(as_tensor(other, self.dtype), exponent=-1.0))

    def __neg__(self) -> "Tensor":
        return ops.Scale.apply(self, factor=-1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return ops.MatMul.apply(self, as_tensor(other, self.dtype))

    def __pow__(self, exponent: float) -> "Tensor":
        return ops.Pow.apply(self, exponent=float(exponent))

    def __getitem__(self, index: Any) -> "Tensor":
        return ops.GetItem.apply(self, index=index)

    # --- methods --- #

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        return ops.Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            count = int(np.prod([self.shape[a] for a in axes]))
        return ops.Sum.apply(self, axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.Reshape.apply(self, shape=shape)

    def transpose(self, *axes: int) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.Transpose.apply(self, axes=axes or None)

    def swapaxes(self, axis1: int, axis2: int) -> "Tensor":
        axes = list(range(self.ndim))
        axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
        return ops.Transpose.apply(self, axes=tuple(axes))

    def relu(self) -> "Tensor":
        return ops.Relu.apply(self)

    def gelu(self) -> "Tensor":
        return ops.Gelu.apply(self)

    def sigmoid(self) -> "Tensor":
        return ops.Sigmoid.apply(self)

    def exp(self) -> "Tensor":
        return ops.Exp.apply(self)

    def log(self) -> "Tensor":
        return ops.Log.apply(self)

    def abs(self) -> "Tensor":
        return ops.Abs.apply(self)

    def sqrt(self) -> "Tensor":
        return ops.Pow.apply(self, exponent=0.5)


def as_tensor(value: Any, dtype: Optional[np.dtype] = None) -> Tensor:
    """Wrap constants so they can take part in an operation."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False, dtype=dtype)


class ComputeGraph:
    """Topologically ordered view of every tensor reachable from a root.

    Only tensors that require a gradient are kept; constants are pruned
    because no adjoint ever flows into them.
    """

    def __init__(self, root: Tensor):
        self.root = root
        self.nodes: List[Tensor] = self._topological_order(root)

    @staticmethod
    def _topological_order(root: Tensor) -> List[Tensor]:
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]

        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue

            if id(node) in visited or not node.requires_grad:
                continue
            visited.add(id(node))

            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.parents:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))

        return order

    @property
    def leaves(self) -> List[Tensor]:
        return [node for node in self.nodes if node.is_leaf]

    def backward(self) -> None:
        root = self.root
        if root.size != 1:
            raise ContractError(
                f"backward needs a scalar loss, got shape {root.shape}"
            )

        if root._consumed:
            raise ContractError(
                "backward was already run on this graph; reset it before running again"
            )

        if not root.requires_grad:
            raise ContractError("loss does not depend on any tensor that requires grad")

        pending: Dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}

        for node in reversed(self.nodes):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue

            if node.grad is None:
                node.grad = np.array(grad, copy=True)
            else:
                node.grad = node.grad + grad

            if node._ctx is None:
                continue

            parent_grads = node._ctx.backward(grad)
            for parent, parent_grad in zip(node._ctx.parents, parent_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue

                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + parent_grad
                else:
                    pending[key] = parent_grad

        root._consumed = True

    def reset(self) -> None:
        """Clear gradients on the graph so backward may run again."""
        for node in self.nodes:
            node.grad = None
        self.root._consumed = False


def backward(loss: Tensor) -> ComputeGraph:
    """Populate `.grad` on every tensor reachable from `loss`."""
    graph = ComputeGraph(loss)
    graph.backward()
    return graph


from . import ops  # noqa: E402
