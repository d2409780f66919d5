"""Rayleigh MIMO channel with imperfect CSI and SVD precoding

Channel matrices are (n_rx, n_tx), optionally stacked along a leading batch
axis. Transmitted symbols are (…, n_tx, d): one row per antenna, d complex
channel uses. Power normalization, the channel and equalization all keep
gradients flowing to the transmitted symbols.
"""

import math
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from ..errors import ContractError, DegenerateInputError, DimensionError, NumericDomainError
from ..utils.log import getLogger
from .complex import ComplexMatrix, ComplexTensor

logger = getLogger(__file__)

SQRT_HALF = math.sqrt(0.5)


def complex_normal(shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries: real parts are drawn before imaginary parts."""
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return (real + 1j * imag) * SQRT_HALF


def sample_rayleigh(
    n_rx: int,
    n_tx: int,
    rng: np.random.Generator,
    batch: Optional[int] = None,
) -> ComplexMatrix:
    """Rayleigh-fading channel with CN(0, 1) entries."""
    if n_rx <= 0 or n_tx <= 0:
        raise DimensionError("sample_rayleigh", (n_rx, n_tx))

    shape = (n_rx, n_tx) if batch is None else (batch, n_rx, n_tx)
    return ComplexMatrix(complex_normal(shape, rng))


class ChannelRealization(NamedTuple):
    """One draw of the channel, its estimate and the receiver noise.

    `h_e` is the estimation error itself, so `h_est == h_p + h_e`.
    `unit_error` and `noise` hold the unit-variance CN(0, 1) draws behind the
    error and the receiver noise; noise is scaled by sqrt(sigma_n_sq) at
    transmission, so the same realization can be replayed at other SNRs.
    """

    h_p: ComplexMatrix
    h_e: ComplexMatrix
    h_est: ComplexMatrix
    sigma_e_sq: float
    sigma_n_sq: float
    snr_db: float
    seed: Optional[int] = None
    noise: Optional[ComplexMatrix] = None
    unit_error: Optional[ComplexMatrix] = None

    @property
    def n_rx(self) -> int:
        return self.h_p.rows

    @property
    def n_tx(self) -> int:
        return self.h_p.cols

    def perfect(self) -> "ChannelRealization":
        """Same draw with the estimate replaced by the true channel."""
        return self._replace(
            h_e=ComplexMatrix(np.zeros_like(self.h_p.values)), h_est=self.h_p, sigma_e_sq=0.0
        )

    def with_snr(self, snr_db: float) -> "ChannelRealization":
        return self._replace(snr_db=snr_db, sigma_n_sq=snr_to_noise_var(snr_db))


def inject_estimation_error(
    h_p: ComplexMatrix,
    sigma_e_sq: float,
    rng: np.random.Generator,
    snr_db: float = 0.0,
) -> ChannelRealization:
    """H_est = H_p + H_e with H_e ~ CN(0, sigma_e_sq).

    The unit error is drawn even when sigma_e_sq is zero so the random stream
    advances the same way for every error level.
    """
    if sigma_e_sq < 0:
        raise NumericDomainError(f"estimation error variance must be >= 0, got {sigma_e_sq}")

    unit_error = ComplexMatrix(complex_normal(h_p.shape, rng))
    h_e = unit_error.scaled(math.sqrt(sigma_e_sq))
    if sigma_e_sq == 0:
        h_est = ComplexMatrix(h_p.values)
    else:
        h_est = h_p + h_e

    return ChannelRealization(
        h_p=h_p,
        h_e=h_e,
        h_est=h_est,
        sigma_e_sq=float(sigma_e_sq),
        sigma_n_sq=snr_to_noise_var(snr_db),
        snr_db=float(snr_db),
        unit_error=unit_error,
    )


def sample_channel_realization(
    batch: int,
    n_rx: int,
    n_tx: int,
    d: int,
    snr_db: float,
    sigma_e_sq: float,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> ChannelRealization:
    """Draw H_p, then H_e, then the unit noise, in that order."""
    h_p = sample_rayleigh(n_rx, n_tx, rng, batch=batch)
    realization = inject_estimation_error(h_p, sigma_e_sq, rng, snr_db=snr_db)
    noise = ComplexMatrix(complex_normal((batch, n_rx, d), rng))
    return realization._replace(noise=noise, seed=seed)


def snr_to_noise_var(snr_db: float, signal_power: float = 1.0) -> float:
    """sigma_n^2 = P / 10^(SNR/10)."""
    if signal_power <= 0:
        raise NumericDomainError(f"signal power must be positive, got {signal_power}")
    return signal_power / (10.0 ** (snr_db / 10.0))


def power_normalize(
    z: Union[ComplexTensor, ComplexMatrix]
) -> Union[ComplexTensor, ComplexMatrix]:
    """Scale every sample so its mean power per complex symbol is 1.

    Statistics are taken over the last two axes; leading axes are samples.
    """
    rows, cols = z.shape[-2:]
    count = rows * cols

    if isinstance(z, ComplexMatrix):
        energy = np.sum(np.abs(z.values) ** 2, axis=(-2, -1), keepdims=True)
        if np.any(energy == 0):
            raise DegenerateInputError("cannot power-normalize an all-zero signal")
        return ComplexMatrix(z.values * np.sqrt(count / energy))

    energy = z.symbol_energy()
    if np.any(energy.data == 0):
        raise DegenerateInputError("cannot power-normalize an all-zero signal")
    return z.scale((energy * (1.0 / count)) ** -0.5)


def _require_unitary(name: str, matrix: ComplexMatrix) -> None:
    if not matrix.is_unitary():
        raise NumericDomainError(f"{name} must be unitary")


def precode(z_c: ComplexTensor, v: ComplexMatrix) -> ComplexTensor:
    """Map stream symbols onto the transmit antennas: V z_c."""
    if v.cols != z_c.rows:
        raise DimensionError("precode", v.shape, z_c.shape)
    _require_unitary("precoder", v)
    return z_c.left_multiply(v)


def transmit(
    z: ComplexTensor,
    h_p: ComplexMatrix,
    sigma_n_sq: float,
    rng: Optional[np.random.Generator] = None,
    unit_noise: Optional[ComplexMatrix] = None,
) -> ComplexTensor:
    """Received signal H_p z + n with n ~ CN(0, sigma_n_sq).

    Noise comes from `unit_noise` when given, otherwise it is drawn from
    `rng`. A positive noise variance without either is a contract error.
    """
    if sigma_n_sq < 0:
        raise NumericDomainError(f"noise variance must be >= 0, got {sigma_n_sq}")
    if h_p.cols != z.rows:
        raise DimensionError("transmit", h_p.shape, z.shape)

    received = z.left_multiply(h_p)

    if unit_noise is None and rng is not None:
        unit_noise = ComplexMatrix(complex_normal(received.shape, rng))
    if sigma_n_sq == 0:
        return received
    if unit_noise is None:
        raise ContractError(f"noise variance {sigma_n_sq} given without a noise source")

    return received.add_constant(unit_noise, factor=math.sqrt(sigma_n_sq))


def equalize(z_hat: ComplexTensor, u_est: ComplexMatrix) -> ComplexTensor:
    """Receive combining with the estimated left singular vectors: U_est^H z."""
    if u_est.rows != z_hat.rows:
        raise DimensionError("equalize", u_est.shape, z_hat.shape)
    _require_unitary("combiner", u_est)
    return z_hat.left_multiply(u_est.H)


def effective_channel(realization: ChannelRealization) -> ComplexMatrix:
    """U_est^H H_p V_est: the stream-to-stream map seen after SVD processing."""
    estimate = realization.h_est.svd()
    return estimate.u.H @ realization.h_p @ estimate.v


def active_streams(n_rx: int, n_tx: int) -> int:
    return min(n_rx, n_tx)
