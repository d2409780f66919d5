"""Exceptions raised across the engine, channel, model and pipeline stages"""

from typing import Optional, Sequence


class HanaError(Exception):
    """Base class for every error raised by hana_jscc."""


class DimensionError(HanaError, ValueError):
    """Operand shapes do not conform."""

    def __init__(self, op: str, *shapes: Sequence[int]):
        self.op = op
        self.shapes = tuple(tuple(shape) for shape in shapes)
        shape_list = " and ".join(str(shape) for shape in self.shapes)
        super().__init__(f"{op}: incompatible shapes {shape_list}")


class NumericDomainError(HanaError, ArithmeticError):
    """Input outside the domain of an elementwise function."""


class ContractError(HanaError, RuntimeError):
    """Misuse of the autodiff engine, e.g. a second backward on a consumed graph."""


class ConfigurationError(HanaError, ValueError):
    """Invalid model, training or run configuration."""


class InputRangeError(HanaError, ValueError):
    """Image values outside of [0, 1]."""


class DegenerateInputError(HanaError, ValueError):
    """Input that cannot be normalized, such as an all-zero symbol block."""


class ConvergenceError(HanaError, ArithmeticError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class TrainingDivergenceError(HanaError, RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, stage: str, step: int, loss: float):
        self.stage = stage
        self.step = step
        self.loss = loss
        super().__init__(f"{stage} diverged at step {step}: loss={loss}")


class ResourceError(HanaError, FileNotFoundError):
    """A checkpoint, config or data file that is required does not exist."""


class CheckpointMismatchError(HanaError, ValueError):
    """Checkpoint was written for a different configuration."""


class IngestionError(HanaError, ValueError):
    """An image file could not be read or has the wrong size."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Unable to ingest {path}: {reason}")


class TrendValidationError(HanaError, ValueError):
    """Report lacks a condition needed to evaluate a trend hypothesis."""
