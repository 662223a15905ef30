"""Validation of command arguments against documented preconditions."""

from collections.abc import Iterable

from .paths import ValidationError

MIN_CLASSES = 2
MAX_CLASSES = 10


def validate_count(field: str, value: int | None, *, minimum: int = 1) -> int:
    """Validate an integer count argument.

    Args:
        field: Argument name reported on failure
        value: Parsed value
        minimum: Smallest accepted value

    Returns:
        The validated count

    Raises:
        ValidationError: If value is missing or below minimum
    """
    if value is None:
        raise ValidationError(field, f"{field} parameter is required")
    if value < minimum:
        raise ValidationError(field, f"{field} must be >= {minimum}, got {value}")
    return value


def validate_choice(field: str, value: str | None, choices: Iterable[str]) -> str:
    """Validate that a string argument is one of a fixed set.

    Raises:
        ValidationError: If value is missing or not among choices
    """
    options = sorted(choices)
    if value is None:
        raise ValidationError(field, f"{field} parameter is required")
    if value not in options:
        raise ValidationError(field, f"{field} must be one of {options}, got {value!r}")
    return value


def validate_synth_input(n: int | None, n_classes: int | None) -> tuple[int, int]:
    """Validate `synth-data` arguments.

    Args:
        n: Number of samples
        n_classes: Number of shape classes

    Returns:
        Tuple of (n, n_classes)

    Raises:
        ValidationError: If n < 1 or n_classes outside [2, 10]
    """
    n = validate_count("n", n)
    n_classes = validate_count("classes", n_classes, minimum=MIN_CLASSES)
    if n_classes > MAX_CLASSES:
        raise ValidationError(
            "classes", f"classes must be <= {MAX_CLASSES}, got {n_classes}"
        )
    return n, n_classes
