"""Reconstruction quality metrics"""

import numpy as np

from ..errors import DimensionError, InputRangeError
from ..utils.validation import UNIT_INTERVAL

# Images live in [0, 1]
PSNR_MAX = 1.0
# Value reported for an exact reconstruction
PSNR_CAP_DB = 100.0


def mse(x: np.ndarray, x_hat: np.ndarray) -> float:
    if np.shape(x) != np.shape(x_hat):
        raise DimensionError("mse", np.shape(x), np.shape(x_hat))
    return float(np.mean((np.asarray(x, dtype=np.float64) - np.asarray(x_hat, dtype=np.float64)) ** 2))


def _check_range(*images: np.ndarray) -> None:
    for image in images:
        low, high = float(np.min(image)), float(np.max(image))
        if not (UNIT_INTERVAL.contains(low) and UNIT_INTERVAL.contains(high)):
            raise InputRangeError(f"PSNR needs values in [0, 1], got [{low:.4g}, {high:.4g}]")


def psnr_from_mse(error: float) -> float:
    if error <= 0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(PSNR_MAX**2 / error), PSNR_CAP_DB))


def psnr(x: np.ndarray, x_hat: np.ndarray) -> float:
    """10 log10(1 / MSE) in dB, capped at 100 dB."""
    error = mse(x, x_hat)
    _check_range(x, x_hat)
    return psnr_from_mse(error)


def batch_psnr(x: np.ndarray, x_hat: np.ndarray) -> np.ndarray:
    """PSNR of every image along the leading axis."""
    if np.shape(x) != np.shape(x_hat):
        raise DimensionError("batch_psnr", np.shape(x), np.shape(x_hat))
    _check_range(x, x_hat)

    diff = np.asarray(x, dtype=np.float64) - np.asarray(x_hat, dtype=np.float64)
    errors = np.mean(diff.reshape(diff.shape[0], -1) ** 2, axis=1)
    return np.array([psnr_from_mse(error) for error in errors])
