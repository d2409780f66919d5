"""SNR-adaptive JSCC codec with a split channel codec and channel-matrix adaptors

Data flow for one batch:

    x -> semantic encoder -> channel encoder 1 -> [tx adaptor] -> channel encoder 2
      -> power normalization -> precode(V_est) -> H_p + noise -> equalize(U_est^H)
      -> channel decoder 1 -> [rx adaptor] -> channel decoder 2 -> semantic decoder -> x_hat

Images are (batch, c, h, w) in [0, 1]. Inside the codec features are kept
channel-last so every projection is a matmul over the last axis.
"""

from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from ..channel import (
    ChannelRealization,
    ComplexMatrix,
    ComplexTensor,
    complex_to_real,
    equalize,
    power_normalize,
    precode,
    real_to_complex,
    transmit,
)
from ..engine import Tensor, concat
from ..errors import ConfigurationError, DimensionError, InputRangeError
from ..utils.validation import UNIT_INTERVAL
from .config import ModelConfig, ResidualInit, Variant
from .layers import (
    Init,
    Linear,
    ParameterSpec,
    SnrModulation,
    TransformerBlock,
    depth_to_space,
    space_to_depth,
)
from .params import ParameterGroup, ParameterStore

SnrValue = Union[float, Sequence[float], np.ndarray]


class ForwardResult(NamedTuple):
    """Reconstruction plus the intermediates used by the distillation loss."""

    x_hat: Tensor
    z_c: ComplexTensor
    z_hat_s: Tensor


class ChannelMatrixAdaptor:
    """Transformer over per-antenna tokens conditioned on a CSI token.

    The estimated channel is projected to one extra token, prepended to the
    sequence, run through the blocks with the feature tokens and dropped at
    the end.
    """

    def __init__(self, name: str, group: ParameterGroup, config: ModelConfig, length: int):
        init = Init.ZERO if config.residual_init == ResidualInit.ZERO else Init.FAN_IN
        self.length = length
        self.width = config.d_prime
        self.tokenizer = Linear(f"{name}.csi_token", group, 2 * config.n_rx * config.n_tx, config.d_prime)
        self.blocks = [
            TransformerBlock(
                f"{name}.block{index}", group, config.d_prime, config.heads, config.mlp_ratio, init
            )
            for index in range(config.n_blocks)
        ]

    def specs(self) -> List[ParameterSpec]:
        specs = self.tokenizer.specs()
        for block in self.blocks:
            specs.extend(block.specs())
        return specs

    def tokenize(self, store: ParameterStore, h_est: ComplexMatrix, dtype: np.dtype) -> Tensor:
        """(…, n_rx, n_tx) channel -> (…, 1, d') token from its flattened re/im parts."""
        lead = h_est.batch_shape
        flat = np.concatenate(
            [h_est.re.reshape(lead + (-1,)), h_est.im.reshape(lead + (-1,))], axis=-1
        )
        token = self.tokenizer(store, Tensor(flat.astype(dtype)))
        return token.reshape(lead + (1, self.width))

    def __call__(self, store: ParameterStore, tokens: Tensor, h_est: ComplexMatrix) -> Tensor:
        if tokens.ndim < 2 or tokens.shape[-2] != self.length or tokens.shape[-1] != self.width:
            raise DimensionError("cma_apply", tokens.shape, (self.length, self.width))

        csi = self.tokenize(store, h_est, tokens.dtype)
        target = tokens.shape[:-2] + (1, self.width)
        if csi.shape != target:
            csi = csi + Tensor(np.zeros(target, dtype=tokens.dtype))

        sequence = concat([csi, tokens], axis=-2)
        for block in self.blocks:
            sequence = block(store, sequence)
        return sequence[..., 1:, :]


class HanaJSCC:
    """The codec bound to a parameter store.

    `build` draws fresh parameters; the constructor binds an existing store
    (for instance one loaded from a checkpoint) after checking it holds every
    parameter this configuration declares.
    """

    def __init__(self, config: ModelConfig, store: ParameterStore):
        self.config = config
        self.store = store
        self._define()
        self._check_store()

    @classmethod
    def build(cls, config: ModelConfig, rng: np.random.Generator) -> "HanaJSCC":
        store = ParameterStore(config.dtype)
        for spec in cls.declare(config):
            store.add(spec.name, spec.group, spec.initialize(rng))
        return cls(config, store)

    @classmethod
    def declare(cls, config: ModelConfig) -> List[ParameterSpec]:
        """Every parameter of `config`, in a fixed order."""
        model = cls.__new__(cls)
        model.config = config
        model._define()
        return model._specs()

    @property
    def variant(self) -> Variant:
        return self.config.variant

    # --- structure --- #

    def _define(self) -> None:
        config = self.config
        channels = config.semantic_channels
        enc = ParameterGroup.SEMANTIC_ENC
        dec = ParameterGroup.SEMANTIC_DEC

        self.encoder_stages: List[Linear] = []
        self.encoder_modulation: List[SnrModulation] = []
        self.decoder_modulation: Optional[SnrModulation] = None
        previous = config.c
        for index, width in enumerate(channels):
            self.encoder_stages.append(Linear(f"semantic_enc.stage{index}", enc, 4 * previous, width))
            if config.snr_adaptive:
                self.encoder_modulation.append(
                    SnrModulation(f"semantic_enc.mod{index}", enc, width, config.modulation_hidden)
                )
            previous = width

        if config.snr_adaptive:
            self.decoder_modulation = SnrModulation(
                "semantic_dec.mod", dec, channels[-1], config.modulation_hidden
            )
        self.decoder_stages: List[Linear] = []
        outputs = list(reversed(channels[:-1])) + [config.c]
        previous = channels[-1]
        for index, width in enumerate(outputs):
            self.decoder_stages.append(Linear(f"semantic_dec.stage{index}", dec, previous, 4 * width))
            previous = width

        feature = config.semantic_size
        self.channel_enc_1 = Linear(
            "channel_enc.fc1", ParameterGroup.CHANNEL_ENC, feature // config.n_tx, config.d_prime
        )
        self.channel_enc_2 = Linear(
            "channel_enc.fc2", ParameterGroup.CHANNEL_ENC, config.d_prime, 2 * config.d
        )
        self.channel_dec_1 = Linear(
            "channel_dec.fc1", ParameterGroup.CHANNEL_DEC, 2 * config.d, config.d_prime
        )
        self.channel_dec_2 = Linear(
            "channel_dec.fc2", ParameterGroup.CHANNEL_DEC, config.d_prime, feature // config.n_rx
        )

        self.adaptors: Dict[str, ChannelMatrixAdaptor] = {}
        if config.variant == Variant.HANA:
            self.adaptors["tx"] = ChannelMatrixAdaptor(
                "adaptor_tx", ParameterGroup.ADAPTOR_TX, config, config.n_tx
            )
            self.adaptors["rx"] = ChannelMatrixAdaptor(
                "adaptor_rx", ParameterGroup.ADAPTOR_RX, config, config.n_rx
            )

    def _specs(self) -> List[ParameterSpec]:
        specs: List[ParameterSpec] = []
        for index, stage in enumerate(self.encoder_stages):
            specs.extend(stage.specs())
            if self.encoder_modulation:
                specs.extend(self.encoder_modulation[index].specs())
        if self.decoder_modulation is not None:
            specs.extend(self.decoder_modulation.specs())
        for stage in self.decoder_stages:
            specs.extend(stage.specs())
        for layer in (self.channel_enc_1, self.channel_enc_2, self.channel_dec_1, self.channel_dec_2):
            specs.extend(layer.specs())
        for adaptor in self.adaptors.values():
            specs.extend(adaptor.specs())
        return specs

    def _check_store(self) -> None:
        for spec in self._specs():
            if spec.name not in self.store:
                raise ConfigurationError(f"Parameter store lacks {spec.name}")
            if self.store[spec.name].shape != spec.shape:
                raise DimensionError(spec.name, self.store[spec.name].shape, spec.shape)

    # --- semantic codec --- #

    def _check_image(self, x: Tensor) -> None:
        if x.ndim != 4 or x.shape[1:] != self.config.image_shape:
            raise DimensionError("semantic_encode", x.shape, self.config.image_shape)
        low, high = float(np.min(x.data)), float(np.max(x.data))
        if not (UNIT_INTERVAL.contains(low) and UNIT_INTERVAL.contains(high)):
            raise InputRangeError(f"image values must lie in [0, 1], got [{low:.4g}, {high:.4g}]")

    def snr_modulate(self, modulation: SnrModulation, features: Tensor, snr_db: SnrValue) -> Tensor:
        return modulation(self.store, features, snr_db)

    def semantic_encode(self, x: Tensor, snr_db: SnrValue) -> Tensor:
        """(B, c, h, w) image -> (B, c', h', w') semantic features."""
        self._check_image(x)
        features = x.transpose(0, 2, 3, 1)
        for index, stage in enumerate(self.encoder_stages):
            features = stage(self.store, space_to_depth(features)).gelu()
            if self.encoder_modulation:
                features = self.snr_modulate(self.encoder_modulation[index], features, snr_db)
        return features.transpose(0, 3, 1, 2)

    def semantic_decode(self, z_hat_s: Tensor, snr_db: SnrValue) -> Tensor:
        """(B, c', h', w') features -> (B, c, h, w) image in [0, 1]."""
        if z_hat_s.shape[1:] != self.config.semantic_shape:
            raise DimensionError("semantic_decode", z_hat_s.shape, self.config.semantic_shape)

        features = z_hat_s.transpose(0, 2, 3, 1)
        if self.decoder_modulation is not None:
            features = self.snr_modulate(self.decoder_modulation, features, snr_db)
        last = len(self.decoder_stages) - 1
        for index, stage in enumerate(self.decoder_stages):
            features = depth_to_space(stage(self.store, features))
            if index < last:
                features = features.gelu()
        return features.sigmoid().transpose(0, 3, 1, 2)

    # --- channel codec --- #

    def channel_encode_1(self, z_s: Tensor) -> Tensor:
        """(B, c', h', w') -> (B, n_tx, d'): one token per transmit antenna."""
        if z_s.shape[1:] != self.config.semantic_shape:
            raise DimensionError("channel_encode_1", z_s.shape, self.config.semantic_shape)
        tokens = z_s.reshape(z_s.shape[0], self.config.n_tx, -1)
        return self.channel_enc_1(self.store, tokens)

    def csi_tokenize(self, h_est: ComplexMatrix, side: str = "tx") -> Tensor:
        return self._adaptor(side).tokenize(self.store, h_est, self.config.dtype)

    def cma_apply(self, tokens: Tensor, h_est: ComplexMatrix, side: str) -> Tensor:
        return self._adaptor(side)(self.store, tokens, h_est)

    def _adaptor(self, side: str) -> ChannelMatrixAdaptor:
        if side not in ("tx", "rx"):
            raise ConfigurationError(f"adaptor side must be 'tx' or 'rx', got {side!r}")
        if side not in self.adaptors:
            raise ConfigurationError(f"{self.variant.value} model has no channel matrix adaptor")
        return self.adaptors[side]

    def channel_encode_2(self, tokens: Tensor) -> ComplexTensor:
        """(B, n_tx, d') -> unit-power complex symbols (B, n_tx, d)."""
        if tokens.shape[-2:] != (self.config.n_tx, self.config.d_prime):
            raise DimensionError("channel_encode_2", tokens.shape, (self.config.n_tx, self.config.d_prime))

        z_c = real_to_complex(self.channel_enc_2(self.store, tokens))
        if self.config.streams < self.config.n_tx:
            mask = np.zeros((self.config.n_tx, 1), dtype=self.config.dtype)
            mask[: self.config.streams] = 1.0
            z_c = z_c.scale(Tensor(mask))
        return power_normalize(z_c)

    def channel_decode(self, z_hat_c: ComplexTensor, h_est: ComplexMatrix) -> Tensor:
        """(B, n_rx, d) equalized symbols -> (B, c', h', w') features."""
        if z_hat_c.shape[-2:] != (self.config.n_rx, self.config.d):
            raise DimensionError("channel_decode", z_hat_c.shape, (self.config.n_rx, self.config.d))

        tokens = self.channel_dec_1(self.store, complex_to_real(z_hat_c))
        if self.variant == Variant.HANA:
            tokens = self.cma_apply(tokens, h_est, "rx")
        features = self.channel_dec_2(self.store, tokens)
        return features.reshape((features.shape[0],) + self.config.semantic_shape)

    # --- end to end --- #

    def forward(
        self,
        x: Union[Tensor, np.ndarray],
        realization: ChannelRealization,
        sigma_n_sq: Optional[float] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> ForwardResult:
        """Run one batch through encoder, channel and decoder.

        Precoding and combining use the SVD of the estimated channel while the
        signal propagates over the true one. `sigma_n_sq` overrides the noise
        level stored in the realization. Realizations without stored noise
        need `rng` to draw it.
        """
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=self.config.dtype))
        snr_db = realization.snr_db
        noise_var = realization.sigma_n_sq if sigma_n_sq is None else sigma_n_sq

        tokens = self.channel_encode_1(self.semantic_encode(x, snr_db))
        if self.variant == Variant.HANA:
            tokens = self.cma_apply(tokens, realization.h_est, "tx")
        z_c = self.channel_encode_2(tokens)

        estimate = realization.h_est.svd()
        received = transmit(
            precode(z_c, estimate.v),
            realization.h_p,
            noise_var,
            rng=rng,
            unit_noise=realization.noise,
        )
        z_hat_c = equalize(received, estimate.u)

        z_hat_s = self.channel_decode(z_hat_c, realization.h_est)
        x_hat = self.semantic_decode(z_hat_s, snr_db)
        return ForwardResult(x_hat=x_hat, z_c=z_c, z_hat_s=z_hat_s)

    __call__ = forward
