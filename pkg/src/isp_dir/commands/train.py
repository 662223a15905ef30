"""train command implementation.

Runs Stage I or Stage II for an experiment config. Outputs go to
``<output_dir>/stage1``, ``<output_dir>/stage2`` or, for an alignment
network trained without the pilot, ``<output_dir>/stage2_nopilot``; the
resolved config is written into the same folder.
"""

from pathlib import Path
from typing import Any

from ..data.corpus import task_targets
from ..errors import DirError, InputError, ParameterError
from ..experiment import ExperimentConfig, experiment_samples
from ..isp.base import get_profile
from ..logging_config import get_logger
from ..training.trainer import CHECKPOINT_NAME, StageResult, train_stage1, train_stage2

logger = get_logger("commands.train")

NOPILOT_DIR = "stage2_nopilot"


def stage_output_dir(config: ExperimentConfig, stage: int) -> Path:
    if stage == 2 and not config.stage2.use_pilot:
        return Path(config.output_dir) / NOPILOT_DIR
    return config.stage_dir(stage)


def stage1_checkpoint_path(config: ExperimentConfig) -> Path:
    """Configured Stage-I checkpoint, else the one Stage I writes by default."""
    if config.stage1_checkpoint:
        return Path(config.stage1_checkpoint)
    return config.stage_dir(1) / CHECKPOINT_NAME


def _run_stage2(config: ExperimentConfig, out_dir: Path, resume: bool) -> StageResult:
    stage2 = config.stage2
    checkpoint = stage1_checkpoint_path(config)
    resuming = resume and (out_dir / CHECKPOINT_NAME).exists()
    if not resuming and not checkpoint.is_file():
        raise InputError(
            f"Stage 2 needs a Stage-1 checkpoint, none at {checkpoint}",
            hint="run `isp-dir train --stage 1` first or set stage2.stage1_checkpoint",
        )
    if stage2.uses_task and stage2.task != config.task_kind:
        raise ParameterError(
            f"stage2.task={stage2.task!r} does not match task.kind={config.task_kind!r}"
        )
    train, _ = experiment_samples(config)
    targets = task_targets(train, config.task_kind) if stage2.uses_task else None
    return train_stage2(
        [s.clean for s in train],
        targets,
        stage2,
        checkpoint,
        out_dir,
        profile=get_profile(config.data.profile),
        resume=resume,
    )


def train(config: ExperimentConfig, stage: int, *, resume: bool = False) -> dict[str, Any]:
    """
    Train one stage.

    Returns:
        Discriminated union dict with status field:

        Success:
            {"status": "success", "stage": 1, "checkpoint": "...", "metrics": "...",
             "config": ".../config.resolved.json", "epochs": 60, "averages": {...}}

        Error:
            {"status": "error", "error_code": "input_error" | "non_finite_loss" | ..., "message": "..."}
    """
    logger.info(f"train called with stage={stage}, resume={resume}", extra={"stage": stage})

    if stage not in (1, 2):
        return {"status": "error", "error_code": "usage_error", "message": f"stage must be 1 or 2, got {stage}"}

    out_dir = stage_output_dir(config, stage)
    try:
        resolved = config.write_resolved(out_dir)
        if stage == 1:
            train_samples, _ = experiment_samples(config)
            result = train_stage1(
                [s.clean for s in train_samples],
                config.stage1,
                config.bundle_config,
                out_dir,
                profile=get_profile(config.data.profile),
                resume=resume,
            )
        else:
            result = _run_stage2(config, out_dir, resume)
    except DirError as e:
        logger.error(f"Stage {stage} failed: {e.error_code} - {e.message}", extra={"stage": stage, "error_code": e.error_code})
        return e.to_error_response()
    except Exception as e:
        logger.error(f"Unexpected error during stage {stage}: {e}", exc_info=True)
        return {
            "status": "error",
            "error_code": "execution_error",
            "message": f"Unexpected error during stage {stage}: {e}",
        }

    return {
        "status": "success",
        "stage": stage,
        "checkpoint": str(result.checkpoint_path),
        "metrics": str(result.metrics_path),
        "config": str(resolved),
        "epochs": result.epochs_completed,
        "averages": result.averages,
    }
