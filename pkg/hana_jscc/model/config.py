"""Architecture configuration"""

import enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, root_validator, validator


@enum.unique
class Variant(str, enum.Enum):
    HANA = "hana"
    NO_ADAPTOR = "no_adaptor"
    # adaptor-free codec whose semantic layers ignore the SNR
    NO_SNR_ADAPT = "no_snr_adapt"


@enum.unique
class ResidualInit(str, enum.Enum):
    """Initialization of the output projections on adaptor residual branches."""

    ZERO = "zero"
    RANDOM = "random"


@enum.unique
class Precision(str, enum.Enum):
    FLOAT64 = "float64"
    FLOAT32 = "float32"


class ModelConfig(BaseModel):
    n_tx: int = 16
    n_rx: int = 16
    d: int = 16
    d_prime: int = 64
    n_blocks: int = 6
    heads: int = 4
    mlp_ratio: int = 2
    c: int = 3
    h: int = 32
    w: int = 32
    semantic_channels: List[int] = [32, 64, 96]
    modulation_hidden: int = 16
    variant: Variant = Variant.HANA
    compression_ratio: Optional[float] = None
    residual_init: ResidualInit = ResidualInit.ZERO
    precision: Precision = Precision.FLOAT64

    class Config:
        extra = "forbid"
        use_enum_values = False

    @validator(
        "n_tx", "n_rx", "d", "d_prime", "heads", "mlp_ratio", "c", "h", "w", "modulation_hidden"
    )
    def _positive(cls, value, field):
        if value <= 0:
            raise ValueError(f"{field.name} must be positive, got {value}")
        return value

    @validator("n_blocks")
    def _non_negative_blocks(cls, value):
        if value < 0:
            raise ValueError(f"n_blocks must be >= 0, got {value}")
        return value

    @validator("semantic_channels")
    def _channels(cls, value):
        if not value or any(channels <= 0 for channels in value):
            raise ValueError("semantic_channels needs at least one positive width")
        return value

    @root_validator(skip_on_failure=True)
    def _consistent(cls, values):
        if values["d_prime"] % values["heads"] != 0:
            raise ValueError(
                f"d_prime={values['d_prime']} is not divisible by heads={values['heads']}"
            )

        factor = 2 ** len(values["semantic_channels"])
        if values["h"] % factor or values["w"] % factor:
            raise ValueError(
                f"image size {values['h']}x{values['w']} is not divisible by {factor}"
            )

        features = (
            values["semantic_channels"][-1]
            * (values["h"] // factor)
            * (values["w"] // factor)
        )
        for antennas in ("n_tx", "n_rx"):
            if features % values[antennas]:
                raise ValueError(
                    f"{features} semantic features cannot be split over {antennas}={values[antennas]}"
                )

        target = values.get("compression_ratio")
        if target is not None:
            actual = values["n_tx"] * values["d"] / (values["c"] * values["h"] * values["w"])
            if not np.isclose(actual, target, rtol=1e-9, atol=0.0):
                raise ValueError(
                    f"n_tx*d/(c*h*w) = {actual:.6g} does not match compression_ratio {target:.6g}"
                )

        return values

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.precision.value)

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return (self.c, self.h, self.w)

    @property
    def semantic_shape(self) -> Tuple[int, int, int]:
        """(c', h', w') of the semantic feature map."""
        factor = 2 ** len(self.semantic_channels)
        return (self.semantic_channels[-1], self.h // factor, self.w // factor)

    @property
    def semantic_size(self) -> int:
        return int(np.prod(self.semantic_shape))

    @property
    def snr_adaptive(self) -> bool:
        return self.variant != Variant.NO_SNR_ADAPT

    @property
    def streams(self) -> int:
        return min(self.n_tx, self.n_rx)

    @property
    def actual_compression_ratio(self) -> float:
        return self.n_tx * self.d / (self.c * self.h * self.w)

    def with_variant(self, variant: Variant) -> "ModelConfig":
        return self.copy(update={"variant": variant})
