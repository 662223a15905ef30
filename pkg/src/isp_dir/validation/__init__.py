"""Input validation utilities."""

from .inputs import validate_choice, validate_count, validate_synth_input
from .paths import ValidationError, validate_output_dir, validate_path

__all__ = [
    "ValidationError",
    "validate_choice",
    "validate_count",
    "validate_output_dir",
    "validate_path",
    "validate_synth_input",
]
