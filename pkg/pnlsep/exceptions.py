"""
Error hierarchy shared by the services and the command line front end.
"""

from pathlib import Path
from typing import Optional, Union


EXIT_BAD_INPUT = 2
EXIT_IO_FAILURE = 3


class PnlError(Exception):
    """Base exception for every failure the toolkit reports on purpose."""

    error_code = "pnl_error"
    exit_code = EXIT_BAD_INPUT

    def __init__(self, message: str, error_code: Optional[str] = None):
        self.message = message
        if error_code is not None:
            self.error_code = error_code
        super().__init__(self.message)


class RejectedInputError(PnlError):
    """Dimension mismatch, wrong role tag or invalid constructor argument."""

    error_code = "rejected_input"


class DomainError(PnlError):
    """Nonlinearity evaluated outside its declared domain."""

    error_code = "outside_domain"


class RangeError(PnlError):
    """Inverse requested for a value outside the image of the domain."""

    error_code = "outside_range"


class DegenerateDataError(PnlError):
    """Constant channel, singular covariance or tied quantile knots."""

    error_code = "degenerate_data"


class InsufficientDataError(PnlError):
    """Too few samples for the requested estimate."""

    error_code = "insufficient_data"


class SingularUnmixingError(PnlError):
    """Unmixing matrix with |det W| below the invertibility threshold."""

    error_code = "singular_unmixing"


class MonotonicityViolationError(PnlError):
    """A compensator derivative is not positive on the data."""

    error_code = "monotonicity_violation"


class StepFailureError(PnlError):
    """Every step halving produced a singular unmixing matrix."""

    error_code = "step_failure"


class DegenerateMapError(PnlError):
    """Global map with an all-zero row or column."""

    error_code = "degenerate_map"


class DegenerateSourceError(PnlError):
    """Source block with a singular Gram matrix or a zero-energy channel."""

    error_code = "degenerate_source"


class InfeasibleConstraintError(PnlError):
    """Mixing matrix generator ran out of resampling attempts."""

    error_code = "infeasible_constraint"


class ConfigError(PnlError):
    """Malformed or invalid run configuration."""

    error_code = "config_error"


class DataFormatError(PnlError):
    """Unparseable CSV or JSON input, with the offending path and line."""

    error_code = "data_format"

    def __init__(self, message: str, path: Union[str, Path, None] = None, line: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        super().__init__(f"{location}{message}")


class StorageError(PnlError):
    """Unreadable input or unwritable output location."""

    error_code = "storage_error"
    exit_code = EXIT_IO_FAILURE

    def __init__(self, message: str, path: Union[str, Path, None] = None):
        self.path = str(path) if path is not None else None
        super().__init__(message)
