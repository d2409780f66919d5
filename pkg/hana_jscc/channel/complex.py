"""Complex linear algebra for the MIMO channel

`ComplexMatrix` is a constant complex matrix (or a stack of them along
leading axes) holding H, U, V or noise. `ComplexTensor` is a differentiable
complex feature stored as a pair of real tensors, so gradients flow through
precoding, the channel and equalization back to the channel encoder.
"""

from typing import NamedTuple, Optional, Tuple, Union

import numpy as np

from ..engine import Tensor, concat
from ..errors import ConvergenceError, DimensionError, NumericDomainError

# Largest relative reconstruction residual accepted from the SVD
SVD_RESIDUAL_LIMIT = 1e-8
# Tolerance on ||M^H M - I||_F for a matrix to count as unitary
UNITARY_TOLERANCE = 1e-6


class ComplexMatrix:
    """Complex matrix with an SVD cache. Leading axes index a batch."""

    def __init__(self, values: np.ndarray):
        array = np.array(values, dtype=np.complex128)
        if array.ndim < 2:
            raise DimensionError("complex_matrix", array.shape)
        array.setflags(write=False)
        self.values = array
        self._svd: Optional["SvdTriple"] = None

    @classmethod
    def from_parts(cls, re: np.ndarray, im: np.ndarray) -> "ComplexMatrix":
        if np.shape(re) != np.shape(im):
            raise DimensionError("complex_matrix", np.shape(re), np.shape(im))
        return cls(np.asarray(re) + 1j * np.asarray(im))

    @classmethod
    def zeros(cls, *shape: int) -> "ComplexMatrix":
        return cls(np.zeros(shape, dtype=np.complex128))

    @classmethod
    def identity(cls, size: int) -> "ComplexMatrix":
        return cls(np.eye(size, dtype=np.complex128))

    def __repr__(self) -> str:
        return f"ComplexMatrix(shape={self.shape})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[-2]

    @property
    def cols(self) -> int:
        return self.values.shape[-1]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.values.shape[:-2]

    @property
    def re(self) -> np.ndarray:
        return self.values.real

    @property
    def im(self) -> np.ndarray:
        return self.values.imag

    @property
    def H(self) -> "ComplexMatrix":
        """Conjugate transpose."""
        return ComplexMatrix(np.conj(np.swapaxes(self.values, -1, -2)))

    def __matmul__(self, other: "ComplexMatrix") -> "ComplexMatrix":
        if self.cols != other.rows:
            raise DimensionError("complex_matmul", self.shape, other.shape)
        return ComplexMatrix(np.matmul(self.values, other.values))

    def __add__(self, other: "ComplexMatrix") -> "ComplexMatrix":
        if self.shape != other.shape:
            raise DimensionError("complex_add", self.shape, other.shape)
        return ComplexMatrix(self.values + other.values)

    def scaled(self, factor: float) -> "ComplexMatrix":
        return ComplexMatrix(self.values * factor)

    def frobenius_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=(-2, -1)))

    def is_unitary(self, tolerance: float = UNITARY_TOLERANCE) -> bool:
        if self.rows != self.cols:
            return False
        gram = np.matmul(self.H.values, self.values)
        deviation = np.sqrt(np.sum(np.abs(gram - np.eye(self.rows)) ** 2, axis=(-2, -1)))
        return bool(np.all(deviation < tolerance))

    def svd(self) -> "SvdTriple":
        if self._svd is None:
            self._svd = svd(self)
        return self._svd


class SvdTriple(NamedTuple):
    """H = U diag(S) V^H with U, V unitary and S descending."""

    u: ComplexMatrix
    s: np.ndarray
    v: ComplexMatrix

    def sigma(self, rows: int, cols: int) -> ComplexMatrix:
        """Rectangular Sigma with the singular values on its diagonal."""
        count = self.s.shape[-1]
        sigma = np.zeros(self.s.shape[:-1] + (rows, cols), dtype=np.complex128)
        index = np.arange(count)
        sigma[..., index, index] = self.s
        return ComplexMatrix(sigma)

    def reconstruct(self) -> ComplexMatrix:
        sigma = self.sigma(self.u.rows, self.v.rows)
        return self.u @ sigma @ self.v.H


def _unit_phase(entries: np.ndarray) -> np.ndarray:
    magnitude = np.abs(entries)
    return np.where(magnitude > 0, entries / np.where(magnitude > 0, magnitude, 1), 1)


def _anchor_phase(columns: np.ndarray) -> np.ndarray:
    """Phase of the largest-magnitude entry of every column."""
    anchor = np.argmax(np.abs(columns), axis=-2)[..., None, :]
    return _unit_phase(np.take_along_axis(columns, anchor, axis=-2))


def svd(matrix: ComplexMatrix) -> SvdTriple:
    """Full SVD with singular values in descending order.

    Each singular-vector pair is rotated so that the largest-magnitude entry
    of every column of V is real and positive, which makes the factors
    reproducible across runs and between models sharing a channel.
    """
    values = matrix.values
    if not np.all(np.isfinite(values)):
        raise NumericDomainError("svd needs a finite channel matrix")

    try:
        u, s, vh = np.linalg.svd(values, full_matrices=True)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"SVD did not converge: {e}")

    v = np.conj(np.swapaxes(vh, -1, -2))
    streams = s.shape[-1]

    v_phase = _anchor_phase(v)
    v = v * np.conj(v_phase)
    u = u.copy()
    u[..., :, :streams] = u[..., :, :streams] * np.conj(v_phase[..., :streams])
    if u.shape[-1] > streams:
        extra = u[..., :, streams:]
        u[..., :, streams:] = extra * np.conj(_anchor_phase(extra))

    triple = SvdTriple(u=ComplexMatrix(u), s=s, v=ComplexMatrix(v))

    norm = matrix.frobenius_norm()
    error = (triple.reconstruct() + matrix.scaled(-1.0)).frobenius_norm()
    residual = float(np.max(error / np.where(norm > 0, norm, 1.0)))
    if residual > SVD_RESIDUAL_LIMIT:
        raise ConvergenceError("SVD reconstruction failed", residual=residual)

    return triple


class ComplexTensor(NamedTuple):
    """Differentiable complex array as real and imaginary tensors."""

    re: Tensor
    im: Tensor

    @classmethod
    def from_matrix(
        cls,
        matrix: ComplexMatrix,
        dtype: np.dtype = np.float64,
        requires_grad: bool = False,
    ) -> "ComplexTensor":
        return cls(
            Tensor(matrix.re.astype(dtype), requires_grad=requires_grad),
            Tensor(matrix.im.astype(dtype), requires_grad=requires_grad),
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.re.shape

    @property
    def rows(self) -> int:
        return self.re.shape[-2]

    @property
    def cols(self) -> int:
        return self.re.shape[-1]

    def to_matrix(self) -> ComplexMatrix:
        return ComplexMatrix.from_parts(self.re.data, self.im.data)

    def left_multiply(self, matrix: ComplexMatrix) -> "ComplexTensor":
        """Constant matrix times this tensor; only the tensor is differentiated."""
        if matrix.cols != self.rows:
            raise DimensionError("complex_matmul", matrix.shape, self.shape)

        dtype = self.re.dtype
        m_re = Tensor(matrix.re.astype(dtype))
        m_im = Tensor(matrix.im.astype(dtype))
        return ComplexTensor(
            m_re @ self.re - m_im @ self.im,
            m_re @ self.im + m_im @ self.re,
        )

    def add_constant(self, matrix: ComplexMatrix, factor: float = 1.0) -> "ComplexTensor":
        if matrix.shape != self.shape:
            raise DimensionError("complex_add", self.shape, matrix.shape)
        dtype = self.re.dtype
        return ComplexTensor(
            self.re + Tensor((matrix.re * factor).astype(dtype)),
            self.im + Tensor((matrix.im * factor).astype(dtype)),
        )

    def scale(self, factor: Union[Tensor, float]) -> "ComplexTensor":
        return ComplexTensor(self.re * factor, self.im * factor)

    def symbol_energy(self) -> Tensor:
        """Sum of |z|^2 over the last two axes, keeping them as size 1."""
        return (self.re * self.re + self.im * self.im).sum(axis=(-2, -1), keepdims=True)


def real_to_complex(x: Tensor) -> ComplexTensor:
    """First half of the last axis becomes the real part, second half the imaginary."""
    width = x.shape[-1]
    if width % 2 != 0:
        raise DimensionError("real_to_complex", x.shape)
    half = width // 2
    return ComplexTensor(x[..., :half], x[..., half:])


def complex_to_real(z: ComplexTensor) -> Tensor:
    return concat([z.re, z.im], axis=-1)
