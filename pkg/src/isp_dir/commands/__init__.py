"""Command implementations behind the isp-dir CLI.

Each command validates its arguments, does its work and returns a
discriminated-union dict: ``{"status": "success", ...}`` or
``{"status": "error", "error_code": ..., "message": ...}``. Commands never
raise to the caller.
"""

from .degrade import degrade
from .evaluate import evaluate
from .synth_data import synth_data
from .train import train

__all__ = ["degrade", "evaluate", "synth_data", "train"]
