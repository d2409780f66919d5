from .complex import (
    ComplexMatrix,
    ComplexTensor,
    SvdTriple,
    complex_to_real,
    real_to_complex,
    svd,
)
from .mimo import (
    ChannelRealization,
    active_streams,
    complex_normal,
    effective_channel,
    equalize,
    inject_estimation_error,
    power_normalize,
    precode,
    sample_channel_realization,
    sample_rayleigh,
    snr_to_noise_var,
    transmit,
)

__all__ = [
    "ChannelRealization",
    "ComplexMatrix",
    "ComplexTensor",
    "SvdTriple",
    "active_streams",
    "complex_normal",
    "complex_to_real",
    "effective_channel",
    "equalize",
    "inject_estimation_error",
    "power_normalize",
    "precode",
    "real_to_complex",
    "sample_channel_realization",
    "sample_rayleigh",
    "snr_to_noise_var",
    "svd",
    "transmit",
]
