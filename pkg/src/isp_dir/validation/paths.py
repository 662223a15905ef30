"""Path validation for command inputs and outputs."""

from pathlib import Path
from typing import Literal


class ValidationError(Exception):
    """Base exception for validation errors."""

    def __init__(self, field: str, message: str) -> None:
        """Initialize validation error.

        Args:
            field: The field that failed validation
            message: Description of what went wrong
        """
        super().__init__(message)
        self.field = field
        self.message = message

    def to_error_response(self) -> dict[str, str]:
        """Convert to a command error response.

        Returns:
            Error dict with status, error_code, and message fields
        """
        return {
            "status": "error",
            "error_code": "usage_error",
            "message": f"{self.field}: {self.message}",
        }


def validate_path(
    path: str | Path,
    *,
    field: str = "path",
    kind: Literal["file", "dir", "any"] = "any",
) -> Path:
    """Validate and normalize a path that must already exist.

    Args:
        path: Path to validate (can be relative or absolute)
        field: Argument name reported on failure
        kind: Require a regular file, a directory, or either

    Returns:
        Normalized absolute Path object

    Raises:
        ValidationError: If path is missing or of the wrong kind
    """
    try:
        normalized = Path(path).resolve()
    except (OSError, RuntimeError) as e:
        raise ValidationError(field, f"Failed to resolve path: {e}") from e

    if not normalized.exists():
        raise ValidationError(field, f"Path does not exist: {normalized}")
    if kind == "file" and not normalized.is_file():
        raise ValidationError(field, f"Expected a file: {normalized}")
    if kind == "dir" and not normalized.is_dir():
        raise ValidationError(field, f"Expected a directory: {normalized}")

    return normalized


def validate_output_dir(path: str | Path, *, force: bool = False) -> Path:
    """Validate an output directory, creating it when absent.

    Args:
        path: Directory that will receive outputs
        force: Allow writing into an existing non-empty directory

    Returns:
        Normalized absolute Path of the (now existing) directory

    Raises:
        ValidationError: If the directory is non-empty and force is False,
            or the path exists as a file
    """
    normalized = Path(path).resolve()
    if normalized.exists():
        if not normalized.is_dir():
            raise ValidationError("out", f"Not a directory: {normalized}")
        if not force and any(normalized.iterdir()):
            raise ValidationError(
                "out",
                f"Output directory is not empty: {normalized} (pass --force to overwrite)",
            )
    normalized.mkdir(parents=True, exist_ok=True)
    return normalized
