"""Building blocks of the codec

Layers only hold parameter names and shapes. Values live in a
`ParameterStore` passed at call time, so the same layer definitions serve a
student, a frozen teacher and a freshly loaded checkpoint.
"""

import enum
import math
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from ..engine import AttentionWeights, Tensor, layer_norm, linear, multi_head_attention
from .params import ParameterGroup, ParameterStore

LAYER_NORM_EPS = 1e-5


@enum.unique
class Init(str, enum.Enum):
    ZERO = "zero"
    ONE = "one"
    FAN_IN = "fan_in"


class ParameterSpec(NamedTuple):
    name: str
    group: ParameterGroup
    shape: Tuple[int, ...]
    init: Init = Init.FAN_IN

    def initialize(self, rng: np.random.Generator) -> np.ndarray:
        if self.init == Init.ZERO:
            return np.zeros(self.shape)
        if self.init == Init.ONE:
            return np.ones(self.shape)
        return rng.standard_normal(self.shape) / math.sqrt(self.shape[0])


class Linear:
    """x @ W + b over the last axis; bias starts at zero."""

    def __init__(
        self,
        name: str,
        group: ParameterGroup,
        fan_in: int,
        fan_out: int,
        init: Init = Init.FAN_IN,
        bias: bool = True,
    ):
        self.weight = f"{name}.weight"
        self.bias = f"{name}.bias" if bias else None
        self.group = group
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.init = init

    def specs(self) -> List[ParameterSpec]:
        specs = [ParameterSpec(self.weight, self.group, (self.fan_in, self.fan_out), self.init)]
        if self.bias is not None:
            specs.append(ParameterSpec(self.bias, self.group, (self.fan_out,), Init.ZERO))
        return specs

    def __call__(self, store: ParameterStore, x: Tensor) -> Tensor:
        bias = store[self.bias] if self.bias is not None else None
        return linear(x, store[self.weight], bias)


class Norm:
    def __init__(self, name: str, group: ParameterGroup, width: int):
        self.gain = f"{name}.gain"
        self.bias = f"{name}.bias"
        self.group = group
        self.width = width

    def specs(self) -> List[ParameterSpec]:
        return [
            ParameterSpec(self.gain, self.group, (self.width,), Init.ONE),
            ParameterSpec(self.bias, self.group, (self.width,), Init.ZERO),
        ]

    def __call__(self, store: ParameterStore, x: Tensor) -> Tensor:
        return layer_norm(x, store[self.gain], store[self.bias], eps=LAYER_NORM_EPS)


def snr_input(snr_db: Union[float, Sequence[float], np.ndarray], dtype: np.dtype) -> Tensor:
    """SNR in dB as a (batch, 1) input, scaled by 1/10 to keep it near unit range."""
    values = np.atleast_1d(np.asarray(snr_db, dtype=dtype)) / dtype.type(10.0)
    return Tensor(values.reshape(-1, 1))


class SnrModulation:
    """Per-channel affine modulation driven by the channel SNR.

    A two-layer network maps the SNR to (scale - 1, shift); with its output
    layer at zero the modulation is the identity.
    """

    def __init__(self, name: str, group: ParameterGroup, channels: int, hidden: int):
        self.channels = channels
        self.hidden = Linear(f"{name}.hidden", group, 1, hidden)
        self.out = Linear(f"{name}.out", group, hidden, 2 * channels)

    def specs(self) -> List[ParameterSpec]:
        return self.hidden.specs() + self.out.specs()

    def __call__(
        self,
        store: ParameterStore,
        features: Tensor,
        snr_db: Union[float, Sequence[float], np.ndarray],
    ) -> Tensor:
        """Modulate channel-last `features` of shape (batch, ..., channels)."""
        snr = snr_input(snr_db, features.dtype)
        params = self.out(store, self.hidden(store, snr).gelu())

        broadcast = (params.shape[0],) + (1,) * (features.ndim - 2) + (self.channels,)
        scale = params[:, : self.channels].reshape(broadcast) + 1.0
        shift = params[:, self.channels :].reshape(broadcast)
        return features * scale + shift


class TransformerBlock:
    """Pre-norm block: x + MHA(LN(x)), then h + MLP(LN(h))."""

    def __init__(
        self,
        name: str,
        group: ParameterGroup,
        width: int,
        heads: int,
        mlp_ratio: int,
        residual_init: Init,
    ):
        self.heads = heads
        self.norm_attention = Norm(f"{name}.norm1", group, width)
        self.query = Linear(f"{name}.attn.q", group, width, width)
        self.key = Linear(f"{name}.attn.k", group, width, width, bias=False)
        self.value = Linear(f"{name}.attn.v", group, width, width)
        self.output = Linear(f"{name}.attn.o", group, width, width, init=residual_init)
        self.norm_mlp = Norm(f"{name}.norm2", group, width)
        self.expand = Linear(f"{name}.mlp.fc1", group, width, mlp_ratio * width)
        self.contract = Linear(f"{name}.mlp.fc2", group, mlp_ratio * width, width, init=residual_init)

    def specs(self) -> List[ParameterSpec]:
        specs: List[ParameterSpec] = []
        for layer in (
            self.norm_attention,
            self.query,
            self.key,
            self.value,
            self.output,
            self.norm_mlp,
            self.expand,
            self.contract,
        ):
            specs.extend(layer.specs())
        return specs

    def _weights(self, store: ParameterStore) -> AttentionWeights:
        return AttentionWeights(
            w_q=store[self.query.weight],
            w_k=store[self.key.weight],
            w_v=store[self.value.weight],
            w_o=store[self.output.weight],
            b_q=store[self.query.bias],
            b_v=store[self.value.bias],
            b_o=store[self.output.bias],
        )

    def __call__(self, store: ParameterStore, x: Tensor) -> Tensor:
        normed = self.norm_attention(store, x)
        x = x + multi_head_attention(normed, normed, normed, self.heads, self._weights(store))
        hidden = self.expand(store, self.norm_mlp(store, x)).gelu()
        return x + self.contract(store, hidden)


def space_to_depth(x: Tensor) -> Tensor:
    """(B, H, W, C) -> (B, H/2, W/2, 4C) by folding 2x2 patches into channels."""
    batch, height, width, channels = x.shape
    patches = x.reshape(batch, height // 2, 2, width // 2, 2, channels)
    return patches.transpose(0, 1, 3, 2, 4, 5).reshape(
        batch, height // 2, width // 2, 4 * channels
    )


def depth_to_space(x: Tensor) -> Tensor:
    """(B, H, W, 4C) -> (B, 2H, 2W, C), the inverse of `space_to_depth`."""
    batch, height, width, channels = x.shape
    patches = x.reshape(batch, height, width, 2, 2, channels // 4)
    return patches.transpose(0, 1, 3, 2, 4, 5).reshape(
        batch, 2 * height, 2 * width, channels // 4
    )
