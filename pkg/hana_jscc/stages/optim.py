"""Adam with global-norm clipping and the cosine learning-rate schedule"""

import math
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..model import ParameterStore


def cosine_lr(step: int, total_steps: int, lr_max: float) -> float:
    """lr_max * (1 + cos(pi * step / total_steps)) / 2."""
    if total_steps <= 0:
        return lr_max
    if not 0 <= step <= total_steps:
        raise ConfigurationError(f"step {step} outside [0, {total_steps}]")
    if step == total_steps:
        return 0.0
    return lr_max * (1.0 + math.cos(math.pi * step / total_steps)) / 2.0


class AdamState:
    """First and second moments per parameter name plus the step counter."""

    def __init__(self) -> None:
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0


def clip_grad_norm(store: ParameterStore, max_norm: Optional[float]) -> float:
    """Scale trainable gradients so their global norm is at most `max_norm`.

    Returns the norm measured before clipping.
    """
    norm = store.global_grad_norm()
    if max_norm is not None and norm > max_norm:
        factor = max_norm / norm
        for _, tensor in store.trainable():
            if tensor.grad is not None:
                tensor.grad = tensor.grad * tensor.grad.dtype.type(factor)
    return norm


def adam_step(
    store: ParameterStore,
    state: AdamState,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update of every trainable parameter.

    Parameters in frozen groups and parameters without a gradient are left
    untouched.
    """
    beta1, beta2 = betas
    state.t += 1
    correction1 = 1.0 - beta1**state.t
    correction2 = 1.0 - beta2**state.t

    for name, tensor in store.trainable():
        grad = tensor.grad
        if grad is None:
            continue

        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(tensor.data)
            v = np.zeros_like(tensor.data)

        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v

        update = lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        tensor.data = (tensor.data - update).astype(tensor.dtype, copy=False)


class Adam:
    def __init__(
        self,
        store: ParameterStore,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        clip_norm: Optional[float] = 1.0,
    ):
        self.store = store
        self.betas = betas
        self.eps = eps
        self.clip_norm = clip_norm
        self.state = AdamState()

    def step(self, lr: float) -> float:
        """Clip, update and return the pre-clipping gradient norm."""
        norm = clip_grad_norm(self.store, self.clip_norm)
        adam_step(self.store, self.state, lr, self.betas, self.eps)
        return norm
