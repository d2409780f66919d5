"""Finite-difference oracle for analytic gradients"""

from typing import Callable, Dict, NamedTuple, Optional, Sequence

import numpy as np

from ..errors import ContractError
from .tensor import Tensor, backward, no_grad

# Denominator floor so vanishing gradients compare on an absolute scale
RELATIVE_ERROR_FLOOR = 1e-6


class GradCheckReport(NamedTuple):
    """Outcome of comparing analytic and central-difference gradients."""

    max_rel_error: float
    tolerance: float
    checked: int
    per_input: Dict[str, float]

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_ERROR_FLOOR)
    return np.abs(analytic - numeric) / scale


def _select_entries(
    size: int, max_entries: Optional[int], rng: np.random.Generator
) -> np.ndarray:
    if max_entries is None or size <= max_entries:
        return np.arange(size)
    return np.sort(rng.choice(size, size=max_entries, replace=False))


def grad_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    eps: float = 1e-6,
    tol: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
    names: Optional[Sequence[str]] = None,
) -> GradCheckReport:
    """Compare gradients of the scalar `f(*inputs)` against central differences.

    `f` must be deterministic: any randomness (channel noise, sampling) has to
    be frozen before calling. When `max_entries` is set, that many randomly
    chosen coordinates of each input are probed instead of all of them.
    """
    rng = np.random.default_rng(seed)
    names = list(names) if names is not None else [
        tensor.name or f"input{index}" for index, tensor in enumerate(inputs)
    ]

    previous_flags = [tensor.requires_grad for tensor in inputs]
    for tensor in inputs:
        # Probing writes through a flat view, which needs contiguous storage
        tensor.data = np.ascontiguousarray(tensor.data)
        tensor.requires_grad = True
        tensor.grad = None

    try:
        loss = f(*inputs)
        if loss.size != 1:
            raise ContractError(f"grad_check needs a scalar function, got {loss.shape}")
        backward(loss)

        analytic = [
            np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad.copy()
            for tensor in inputs
        ]

        per_input: Dict[str, float] = {}
        checked = 0

        with no_grad():
            for name, tensor, grad in zip(names, inputs, analytic):
                flat = tensor.data.reshape(-1)
                grad_flat = grad.reshape(-1)
                worst = 0.0

                for index in _select_entries(flat.size, max_entries, rng):
                    original = flat[index]

                    flat[index] = original + eps
                    plus = float(f(*inputs).data)
                    flat[index] = original - eps
                    minus = float(f(*inputs).data)
                    flat[index] = original

                    numeric = (plus - minus) / (2.0 * eps)
                    error = float(
                        relative_error(np.asarray(grad_flat[index]), np.asarray(numeric))
                    )
                    worst = max(worst, error)
                    checked += 1

                per_input[name] = worst
    finally:
        for tensor, flag in zip(inputs, previous_flags):
            tensor.requires_grad = flag

    max_error = max(per_input.values(), default=0.0)
    return GradCheckReport(
        max_rel_error=max_error, tolerance=tol, checked=checked, per_input=per_input
    )
