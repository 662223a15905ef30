"""Toy corpus generation, folder ingestion and the synthesis worker pool."""

from .corpus import (
    FAMILY_NAMES,
    ToySample,
    gen_toy_corpus,
    held_out_split,
    load_folder,
    read_corpus,
    render_toy,
    task_targets,
    write_corpus,
)
from .pool import SynthesisPool, run_parallel

__all__ = [
    "FAMILY_NAMES",
    "SynthesisPool",
    "ToySample",
    "gen_toy_corpus",
    "held_out_split",
    "load_folder",
    "read_corpus",
    "render_toy",
    "run_parallel",
    "task_targets",
    "write_corpus",
]
