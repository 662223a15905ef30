"""Utility modules for isp-dir."""

from .seeding import derive_rng, derive_seed, torch_generator

__all__ = ["derive_rng", "derive_seed", "torch_generator"]
