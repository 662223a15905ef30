"""Exception hierarchy shared by every isp-dir module.

Every error carries a stable ``error_code`` so the command layer can turn it
into the same discriminated-union response the CLI prints on failure.
"""

from typing import Any


class DirError(Exception):
    """Base exception for isp-dir operations."""

    error_code = "execution_error"

    def __init__(
        self,
        message: str,
        *,
        recoverable: bool = False,
        details: dict[str, Any] | None = None,
    ) -> None:
        """
        Initialize error.

        Args:
            message: Human-readable error description
            recoverable: Whether the operation can be retried as-is
            details: Optional additional context
        """
        super().__init__(message)
        self.message = message
        self.recoverable = recoverable
        self.details = details or {}

    def to_error_response(self) -> dict[str, Any]:
        """Convert to the error branch of a command response.

        Returns:
            Error dict with status, error_code, and message fields
        """
        response: dict[str, Any] = {
            "status": "error",
            "error_code": self.error_code,
            "message": self.message,
        }
        if self.details:
            response["details"] = self.details
        return response


class DimensionError(DirError):
    """Array or tensor shapes violate an operation's contract."""

    error_code = "dimension_error"


class ParameterError(DirError):
    """A numeric parameter is outside its valid domain."""

    error_code = "parameter_error"


class BatchError(DirError):
    """A batch is too small for in-batch negative sampling."""

    error_code = "batch_error"


class SampleSizeError(DirError):
    """Too few samples for a statistic to be meaningful."""

    error_code = "sample_size_error"


class UnknownNetworkError(DirError, KeyError):
    """A bundle lookup named a network that does not exist."""

    error_code = "key_error"

    def __str__(self) -> str:
        return self.message


class FrozenViolationError(DirError):
    """A frozen parameter set changed while frozen."""

    error_code = "frozen_violation"


class NonFiniteLossError(DirError):
    """A loss part evaluated to NaN or infinity."""

    error_code = "non_finite_loss"

    def __init__(self, part: str, value: float) -> None:
        super().__init__(
            f"Loss part '{part}' is not finite ({value})",
            details={"part": part, "value": str(value)},
        )
        self.part = part


class AcceptanceError(DirError):
    """A trained model misses a directional check (ablation ordering, task gain, clustering)."""

    error_code = "acceptance_failed"


class InputError(DirError):
    """A required input (file, folder, checkpoint) is missing or unusable."""

    error_code = "input_error"

    def __init__(self, message: str, *, hint: str | None = None) -> None:
        super().__init__(message, details={"hint": hint} if hint else None)
        self.hint = hint


class UsageError(DirError):
    """Command-line arguments violate a documented precondition."""

    error_code = "usage_error"
