"""synth-data command implementation.

Renders the toy shape corpus into a folder of PNGs plus a manifest.
"""

from pathlib import Path
from typing import Any

from ..data.corpus import TOY_SIZE, ToySample, corpus_seeds, make_sample, write_corpus
from ..data.pool import run_parallel
from ..errors import DirError
from ..logging_config import get_logger
from ..validation import ValidationError, validate_output_dir, validate_synth_input

logger = get_logger("commands.synth_data")


def synth_data(
    out: str,
    n: int | None,
    n_classes: int | None,
    seed: int,
    *,
    force: bool = False,
    size: int = TOY_SIZE,
    max_workers: int | None = None,
) -> dict[str, Any]:
    """
    Generate the toy corpus.

    Every sample's seed is drawn from ``seed`` up front, so the files do not
    depend on worker scheduling and a rerun with the same seed is
    bit-identical.

    Returns:
        Discriminated union dict with status field:

        Success:
            {"status": "success", "out": "/abs/dir", "manifest": "/abs/dir/manifest.json",
             "n": 200, "classes": 4, "seed": 0}

        Error:
            {"status": "error", "error_code": "usage_error" | ..., "message": "..."}
    """
    logger.info(f"synth-data called with out={out}, n={n}, classes={n_classes}, seed={seed}")

    # Step 1: Validate input
    try:
        n, n_classes = validate_synth_input(n, n_classes)
        out_dir = validate_output_dir(out, force=force)
    except ValidationError as e:
        logger.warning(f"Input validation failed: {e}")
        return e.to_error_response()

    # Step 2: Render in parallel, write serially
    seeds = corpus_seeds(n, seed)

    def render(index: int) -> ToySample:
        return make_sample(index, index % n_classes, seeds[index], size)

    try:
        samples = run_parallel(render, list(range(n)), max_workers)
        manifest = write_corpus(samples, out_dir)
    except DirError as e:
        logger.error(f"Corpus synthesis failed: {e.error_code} - {e.message}")
        return e.to_error_response()
    except Exception as e:
        logger.error(f"Unexpected error during corpus synthesis: {e}", exc_info=True)
        return {
            "status": "error",
            "error_code": "execution_error",
            "message": f"Unexpected error during corpus synthesis: {e}",
        }

    logger.info(f"Wrote {n} samples to {out_dir}", extra={"path": str(out_dir)})
    return {
        "status": "success",
        "out": str(out_dir),
        "manifest": str(Path(manifest)),
        "n": n,
        "classes": n_classes,
        "seed": seed,
    }
