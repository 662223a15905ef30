"""eval command implementation.

Loads a checkpoint, degrades the test images with the experiment profile and
seed, and writes one report:

- ``metrics``: per-image PSNR/SSIM of degraded and restored images
- ``ablation``: the r0 / +A / +pilot rows
- ``latents``: invariance ratio, per-image r0 and pilot latent dumps
  (little-endian float32 with JSON headers), the PCA projection CSV and the
  pilot clustering CSV
- ``task``: task accuracy on degraded vs restored images
"""

import json
from pathlib import Path
from typing import Any

from ..data.corpus import FAMILY_NAMES, MANIFEST_NAME, ToySample, load_folder, read_corpus, task_targets
from ..errors import DirError, InputError
from ..evaluation.ablation import ablation_report, metrics_report, task_accuracy_report
from ..evaluation.inference import degraded_test_set
from ..evaluation.latents import (
    MIN_INVARIANCE_PAIRS,
    dump_latents,
    invariance_distances,
    latent_grids,
    pca_project,
    pilot_cluster_accuracy,
    write_projection_csv,
)
from ..experiment import ExperimentConfig, experiment_samples
from ..isp.base import DegradationProfile, ImageRGB, get_profile
from ..isp.degradation import make_pair
from ..logging_config import get_logger
from ..models.bundle import ModelBundle, load_checkpoint
from ..utils.seeding import derive_rng
from ..validation import ValidationError, validate_choice, validate_path

logger = get_logger("commands.evaluate")

REPORTS = ("metrics", "ablation", "latents", "task")
LATENT_STREAM = 9
CLUSTER_IMAGES = 4
CLUSTER_DEGRADATIONS = 50
MIN_PCA_POINTS = 3
DUMP_DIR = "latent_dumps"


def _test_samples(config: ExperimentConfig, test: str | None) -> tuple[list[ToySample] | None, list[ImageRGB]]:
    """Labeled samples when available, and the clean test images."""
    if test is None:
        _, held_out = experiment_samples(config)
        if not held_out:
            raise InputError("No held-out test set", hint="pass --test or set data.held_out > 0")
        return held_out, [s.clean for s in held_out]
    folder = validate_path(test, field="test", kind="dir")
    if (folder / MANIFEST_NAME).is_file():
        samples = read_corpus(folder)
        return samples, [s.clean for s in samples]
    return None, load_folder(folder, crop_size=config.data.size)


def _latents_report(
    bundle: ModelBundle,
    samples: list[ToySample] | None,
    clean: list[ImageRGB],
    profile: DegradationProfile,
    seed: int,
    out_dir: Path,
    strict: bool,
) -> dict[str, Any]:
    pairs = [make_pair(img, profile, derive_rng(seed, LATENT_STREAM, i)) for i, img in enumerate(clean)]
    result: dict[str, Any] = {"pairs": len(pairs)}
    if len(pairs) >= MIN_INVARIANCE_PAIRS:
        distances = invariance_distances(bundle.dir_encoder, pairs)
        result.update(intra=distances.intra, inter=distances.inter, invariance_ratio=distances.ratio)
    else:
        logger.warning(f"Skipping invariance ratio: {len(pairs)} pairs < {MIN_INVARIANCE_PAIRS}")
        result["invariance_ratio"] = None

    views = [a for a, _ in pairs]
    r0 = latent_grids(bundle.dir_encoder, views)
    ids = [s.id for s in samples] if samples else [f"{i:05d}" for i in range(len(clean))]
    groups = [FAMILY_NAMES[s.label] for s in samples] if samples else ["unlabeled"] * len(clean)

    grids = {"r0": r0, "pilot": latent_grids(bundle.dfr_encoder, views)}
    result["dumps"] = len(dump_latents(out_dir / DUMP_DIR, ids, grids))
    if len(clean) >= MIN_PCA_POINTS:
        write_projection_csv(out_dir / "latents_pca.csv", ids, pca_project(r0.flatten(1)), groups)
    else:
        logger.warning(f"Skipping latent PCA: {len(clean)} images < {MIN_PCA_POINTS}")

    if len(clean) >= 2:
        cluster = pilot_cluster_accuracy(
            bundle.dfr_encoder, clean[:CLUSTER_IMAGES], CLUSTER_DEGRADATIONS, profile, seed
        )
        write_projection_csv(out_dir / "pilot_clusters.csv", cluster.ids, cluster.coords, cluster.groups)
        result["cluster_accuracy"] = cluster.accuracy
        if strict:
            cluster.require_above_chance()
    (out_dir / "latents_summary.json").write_text(json.dumps(result, indent=2, sort_keys=True))
    return result


def evaluate(
    config: ExperimentConfig,
    ckpt: str,
    report: str | None,
    *,
    test: str | None = None,
    out: str | None = None,
    nopilot_ckpt: str | None = None,
    strict: bool = False,
) -> dict[str, Any]:
    """
    Produce one evaluation report for a checkpoint.

    With ``strict`` the directional checks (ablation ordering, task accuracy
    gain, pilot clustering above chance) fail the command with
    ``acceptance_failed``; otherwise a violated ordering is only logged.

    Returns:
        Discriminated union dict with status field:

        Success:
            {"status": "success", "report": "ablation", "out": "/abs/dir",
             "files": [...], "summary": {...}}

        Error:
            {"status": "error", "error_code": "input_error" | "usage_error" | "acceptance_failed" | ..., "message": "..."}
    """
    logger.info(f"eval called with ckpt={ckpt}, report={report}, test={test}")

    # Step 1: Validate input
    try:
        report_name = validate_choice("report", report, REPORTS)
    except ValidationError as e:
        logger.warning(f"Input validation failed: {e}")
        return e.to_error_response()

    # Step 2: Load models and data, then write the report
    try:
        bundle = load_checkpoint(Path(ckpt)).bundle
        bundle.eval()
        samples, clean = _test_samples(config, test)
        profile = get_profile(config.data.profile)
        degraded = degraded_test_set(clean, profile, config.seed)
        out_dir = Path(out) if out else Path(ckpt).parent / "eval"
        out_dir.mkdir(parents=True, exist_ok=True)
        config.write_resolved(out_dir)

        summary: dict[str, Any]
        files: tuple[Path, ...]
        if report_name == "metrics":
            ids = [s.id for s in samples] if samples else None
            metrics = metrics_report(bundle, clean, degraded, ids)
            files = metrics.write(out_dir)
            summary = metrics.means()
        elif report_name == "ablation":
            nopilot = load_checkpoint(Path(nopilot_ckpt)).bundle if nopilot_ckpt else None
            ablation = ablation_report(bundle, clean, degraded, nopilot=nopilot)
            files = ablation.write(out_dir)
            summary = {**ablation.to_dict(), "ordered": ablation.is_ordered()}
            if strict:
                ablation.require_ordered()
            elif not summary["ordered"]:
                logger.warning("Ablation PSNR is not ordered r0 < +A < +pilot; rerun with --strict to fail")
        elif report_name == "task":
            if samples is None:
                raise InputError("The task report needs labels", hint="pass a --test folder written by synth-data")
            accuracy = task_accuracy_report(bundle, degraded, task_targets(samples, bundle.config.task.kind))
            files = (out_dir / "task.txt",)
            files[0].write_text(accuracy.format_text())
            summary = accuracy.to_dict()
            if strict:
                accuracy.require_gain()
        else:
            summary = _latents_report(bundle, samples, clean, profile, config.seed, out_dir, strict)
            files = (
                tuple(sorted(out_dir.glob("latents_*")))
                + tuple(out_dir.glob("pilot_clusters.csv"))
                + tuple(sorted((out_dir / DUMP_DIR).glob("*.bin")))
            )
    except DirError as e:
        logger.error(f"Evaluation failed: {e.error_code} - {e.message}", extra={"error_code": e.error_code})
        return e.to_error_response()
    except ValidationError as e:
        return e.to_error_response()
    except Exception as e:
        logger.error(f"Unexpected error during evaluation: {e}", exc_info=True)
        return {
            "status": "error",
            "error_code": "execution_error",
            "message": f"Unexpected error during evaluation: {e}",
        }

    logger.info(f"Wrote {report_name} report to {out_dir}", extra={"path": str(out_dir)})
    return {
        "status": "success",
        "report": report_name,
        "out": str(out_dir),
        "files": [str(f) for f in files],
        "summary": summary,
    }
