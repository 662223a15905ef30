"""degrade command implementation.

Emits one or two degraded renditions of every clean PNG in a folder, each
with a JSON sidecar recording the sampled ISP parameters.
"""

from pathlib import Path
from typing import Any

from ..data.pool import run_parallel
from ..errors import DirError
from ..isp.base import PROFILES, get_profile
from ..isp.degradation import degrade as degrade_image
from ..isp.degradation import sample_params
from ..isp.io import load_rgb, save_rgb
from ..logging_config import get_logger
from ..utils.seeding import derive_rng
from ..validation import ValidationError, validate_choice, validate_output_dir, validate_path

logger = get_logger("commands.degrade")

DEGRADE_STREAM = 5


def _output_names(stem: str, pairs: bool) -> list[str]:
    return [f"{stem}_a.png", f"{stem}_b.png"] if pairs else [f"{stem}.png"]


def degrade(
    in_dir: str,
    out: str,
    profile: str | None,
    seed: int,
    *,
    pairs: bool = False,
    force: bool = False,
    max_workers: int | None = None,
) -> dict[str, Any]:
    """
    Degrade a folder of clean PNGs.

    View v of input file i uses parameters drawn from the stream keyed by
    (seed, i, v), so output is deterministic per seed and independent of the
    worker count.

    Returns:
        Discriminated union dict with status field:

        Success:
            {"status": "success", "out": "/abs/dir", "profile": "dark",
             "inputs": 200, "outputs": 400, "seed": 0}

        Error:
            {"status": "error", "error_code": "usage_error" | "input_error" | ..., "message": "..."}
    """
    logger.info(f"degrade called with in={in_dir}, out={out}, profile={profile}, pairs={pairs}, seed={seed}")

    # Step 1: Validate input
    try:
        profile_name = validate_choice("profile", profile, PROFILES)
        source = validate_path(in_dir, field="in", kind="dir")
        out_dir = validate_output_dir(out, force=force)
    except ValidationError as e:
        logger.warning(f"Input validation failed: {e}")
        return e.to_error_response()

    files = sorted(p for p in source.iterdir() if p.suffix.lower() == ".png")
    if not files:
        return {
            "status": "error",
            "error_code": "input_error",
            "message": f"No PNG images in {source}",
        }
    chosen = get_profile(profile_name)

    # Step 2: Degrade every file in the pool
    def process(index: int) -> list[Path]:
        file = files[index]
        clean = load_rgb(file)
        written: list[Path] = []
        for view, name in enumerate(_output_names(file.stem, pairs)):
            params = sample_params(chosen, derive_rng(seed, DEGRADE_STREAM, index, view))
            written.append(save_rgb(out_dir / name, degrade_image(clean, params), params=params))
        return written

    try:
        outputs = run_parallel(process, list(range(len(files))), max_workers)
    except DirError as e:
        logger.error(f"Degradation failed: {e.error_code} - {e.message}")
        return e.to_error_response()
    except Exception as e:
        logger.error(f"Unexpected error during degradation: {e}", exc_info=True)
        return {
            "status": "error",
            "error_code": "execution_error",
            "message": f"Unexpected error during degradation: {e}",
        }

    n_outputs = sum(len(o) for o in outputs)
    logger.info(f"Wrote {n_outputs} degraded images to {out_dir}", extra={"path": str(out_dir)})
    return {
        "status": "success",
        "out": str(out_dir),
        "profile": profile_name,
        "inputs": len(files),
        "outputs": n_outputs,
        "seed": seed,
    }
