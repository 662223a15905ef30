"""Two-stage training loops.

Stage I alternates a DiR step (dir_encoder + critic) and a DfR step
(dfr_encoder + decoder + dfr_critic) on every batch. Stage II freezes both
encoders and the decoder and trains the alignment network, plus the task head
when the task loss is weighted in.

All randomness is keyed by (seed, stage, epoch, step or sample index), and a
checkpoint is written after every epoch, so a resumed run reproduces an
uninterrupted one exactly.
"""

import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from numpy.typing import NDArray

from ..errors import BatchError, NonFiniteLossError, ParameterError
from ..isp.base import DegradationProfile, ImageRGB
from ..isp.degradation import degrade, make_pair, sample_params
from ..logging_config import StageLoggerAdapter, stage_logger
from ..metrics import MetricsRecorder, StageMetrics
from ..models.bundle import (
    NETWORK_NAMES,
    STAGE1_FROZEN,
    BundleConfig,
    Checkpoint,
    ModelBundle,
    load_checkpoint,
    save_checkpoint,
)
from ..models.networks import images_to_tensor, task_forward
from ..utils.seeding import derive_rng, torch_generator
from .config import Stage1Config, Stage2Config, lr_at_epoch
from .losses import PARTS, LossReport, loss_align, loss_dfr, loss_dir, task_loss

LOGGER_NAME = "training.trainer"

STAGE1 = 1
STAGE2 = 2
PRETRAIN = 3

CHECKPOINT_NAME = "checkpoint.pt"
METRICS_NAME = "metrics.csv"

STAGE1_TRAINABLE = {
    "dir": ("dir_encoder", "critic"),
    "dfr": ("dfr_encoder", "decoder", "dfr_critic"),
}


@dataclass
class StageResult:
    bundle: ModelBundle
    checkpoint_path: Path
    metrics_path: Path
    epochs_completed: int
    averages: dict[str, float] = field(default_factory=dict)


def epoch_batches(n: int, batch_size: int, seed: int, stage: int, epoch: int) -> list[NDArray[np.int64]]:
    """Shuffle ``range(n)`` for one epoch and cut it into batches.

    A trailing batch with a single item is merged into the previous batch,
    since in-batch negatives need at least two.

    Raises:
        BatchError: If n < 2
    """
    if n < 2:
        raise BatchError(f"training needs at least 2 images, got {n}")
    order = derive_rng(seed, stage, epoch).permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def _set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def _current_lr(optimizer: torch.optim.Optimizer) -> float:
    return float(optimizer.param_groups[0]["lr"])


def _step(optimizer: torch.optim.Optimizer, report: LossReport) -> None:
    optimizer.zero_grad(set_to_none=True)
    report.total.backward()
    optimizer.step()


def _record(
    recorder: MetricsRecorder,
    metrics: StageMetrics,
    *,
    epoch: int,
    step: int,
    loss: str,
    report: LossReport,
    lr: float,
) -> None:
    values = report.values()
    total = float(report.total.detach())
    recorder.record(epoch=epoch, step=step, loss=loss, total=total, parts=values, lr=lr)
    metrics.record(loss, total, values)


def _checked(report: LossReport, log: StageLoggerAdapter, step: int) -> LossReport:
    try:
        return report.check_finite()
    except NonFiniteLossError as e:
        log.error(
            f"Non-finite loss: {e.message}",
            extra={"step": step, "part": e.part, "error_code": e.error_code},
        )
        raise


def pair_batch(
    clean: Sequence[ImageRGB],
    indices: NDArray[np.int64],
    profile: DegradationProfile,
    seed: int,
    epoch: int,
    dtype: torch.dtype,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Two degraded views and the clean target for each index."""
    views1: list[ImageRGB] = []
    views2: list[ImageRGB] = []
    for idx in indices:
        x1, x2 = make_pair(clean[int(idx)], profile, derive_rng(seed, STAGE1, epoch, int(idx)))
        views1.append(x1)
        views2.append(x2)
    targets = [clean[int(idx)] for idx in indices]
    return (
        images_to_tensor(views1, dtype),
        images_to_tensor(views2, dtype),
        images_to_tensor(targets, dtype),
    )


def degraded_batch(
    clean: Sequence[ImageRGB],
    indices: NDArray[np.int64],
    profile: DegradationProfile,
    seed: int,
    epoch: int,
    dtype: torch.dtype,
) -> tuple[torch.Tensor, torch.Tensor]:
    """One degraded view and the clean target for each index."""
    views = [
        degrade(clean[int(idx)], sample_params(profile, derive_rng(seed, STAGE2, epoch, int(idx))))
        for idx in indices
    ]
    return images_to_tensor(views, dtype), images_to_tensor([clean[int(i)] for i in indices], dtype)


def train_stage1(
    clean: Sequence[ImageRGB],
    cfg: Stage1Config,
    bundle_config: BundleConfig,
    output_dir: Path,
    *,
    profile: DegradationProfile,
    resume: bool = False,
) -> StageResult:
    """Learn the DiR and DfR encoders, the decoder and both critics.

    Raises:
        NonFiniteLossError: If any loss part becomes NaN or infinite
        InputError: If ``resume`` is set and the checkpoint cannot be loaded
    """
    log = stage_logger(LOGGER_NAME, STAGE1)
    ckpt_path = output_dir / CHECKPOINT_NAME
    metrics_path = output_dir / METRICS_NAME
    output_dir.mkdir(parents=True, exist_ok=True)

    start_epoch = 0
    checkpoint: Checkpoint | None = None
    if resume and ckpt_path.exists():
        checkpoint = load_checkpoint(ckpt_path)
        if checkpoint.stage != STAGE1:
            raise ParameterError(f"{ckpt_path} is a stage {checkpoint.stage} checkpoint")
        bundle = checkpoint.bundle
        start_epoch = checkpoint.epoch
        log.at_epoch(start_epoch).info(f"Resuming stage 1 at epoch {start_epoch}")
    else:
        bundle = ModelBundle.build(bundle_config, seed=cfg.seed)

    optimizers = {
        key: torch.optim.Adam(bundle.parameters(names), lr=cfg.lr_initial)
        for key, names in STAGE1_TRAINABLE.items()
    }
    if checkpoint is not None:
        for key in optimizers:
            optimizers[key].load_state_dict(checkpoint.optimizer_states[key])

    metrics = StageMetrics(stage=STAGE1)
    dtype = bundle.dtype
    bundle.train()
    with MetricsRecorder(
        metrics_path,
        PARTS,
        log_wall_time=cfg.log_wall_time,
        resume_epoch=start_epoch if checkpoint is not None else None,
    ) as recorder:
        for epoch in range(start_epoch, cfg.max_epochs):
            started = time.perf_counter()
            epoch_log = log.at_epoch(epoch)
            metrics.reset()
            lr = lr_at_epoch(cfg.lr_initial, cfg.lr_final, cfg.lr_drop_epoch, epoch)
            for opt in optimizers.values():
                _set_lr(opt, lr)
            for step, indices in enumerate(epoch_batches(len(clean), cfg.batch_size, cfg.seed, STAGE1, epoch)):
                x1, x2, y_star = pair_batch(clean, indices, profile, cfg.seed, epoch, dtype)

                report = _checked(
                    loss_dir(x1, x2, bundle, cfg, torch_generator(cfg.seed, STAGE1, epoch, step, 0)),
                    epoch_log, step,
                )
                _step(optimizers["dir"], report)
                _record(recorder, metrics, epoch=epoch, step=step, loss="dir", report=report,
                        lr=_current_lr(optimizers["dir"]))

                report = _checked(
                    loss_dfr(y_star, bundle, cfg, torch_generator(cfg.seed, STAGE1, epoch, step, 1)),
                    epoch_log, step,
                )
                _step(optimizers["dfr"], report)
                _record(recorder, metrics, epoch=epoch, step=step, loss="dfr", report=report,
                        lr=_current_lr(optimizers["dfr"]))
                metrics.step()

            recorder.flush()
            save_checkpoint(
                ckpt_path,
                Checkpoint(
                    bundle=bundle,
                    stage=STAGE1,
                    epoch=epoch + 1,
                    optimizer_states={k: o.state_dict() for k, o in optimizers.items()},
                ),
            )
            averages = metrics.averages()
            epoch_log.info(
                f"Stage 1 epoch {epoch}: dir={averages.get('dir.total', 0.0):.4f} "
                f"dfr={averages.get('dfr.total', 0.0):.4f}",
                extra={"duration": time.perf_counter() - started},
            )

    return StageResult(
        bundle=bundle,
        checkpoint_path=ckpt_path,
        metrics_path=metrics_path,
        epochs_completed=max(start_epoch, cfg.max_epochs),
        averages=metrics.averages(),
    )


def pretrain_task_head(
    bundle: ModelBundle,
    clean: Sequence[ImageRGB],
    targets: torch.Tensor,
    *,
    epochs: int,
    lr: float,
    batch_size: int,
    seed: int,
) -> float:
    """Supervised training of the task head on clean images.

    Returns:
        Mean task loss of the final epoch (0.0 when ``epochs`` is 0)
    """
    log = stage_logger(LOGGER_NAME, STAGE2)
    optimizer = torch.optim.Adam(bundle.task_head.parameters(), lr=lr)
    bundle.task_head.train()
    last = 0.0
    for epoch in range(epochs):
        losses: list[float] = []
        for indices in epoch_batches(len(clean), batch_size, seed, PRETRAIN, epoch):
            images = images_to_tensor([clean[int(i)] for i in indices], bundle.dtype)
            loss = task_loss(task_forward(bundle.task_head, images), targets[torch.as_tensor(indices)])
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        last = float(np.mean(losses))
        log.at_epoch(epoch).debug(f"Task head pretraining epoch {epoch}: loss={last:.4f}")
    return last


def train_stage2(
    clean: Sequence[ImageRGB],
    targets: torch.Tensor | None,
    cfg: Stage2Config,
    stage1_checkpoint: Path,
    output_dir: Path,
    *,
    profile: DegradationProfile,
    resume: bool = False,
) -> StageResult:
    """Train the alignment network (and task head) on frozen Stage-I networks.

    Raises:
        InputError: If the Stage-I checkpoint is missing or unreadable
        FrozenViolationError: If a frozen network changes during the stage
        NonFiniteLossError: If any loss part becomes NaN or infinite
    """
    if cfg.uses_task and targets is None:
        raise ParameterError(f"stage 2 task {cfg.task!r} with gamma1 > 0 needs labels")

    log = stage_logger(LOGGER_NAME, STAGE2)
    ckpt_path = output_dir / CHECKPOINT_NAME
    metrics_path = output_dir / METRICS_NAME
    output_dir.mkdir(parents=True, exist_ok=True)

    start_epoch = 0
    resumed: Checkpoint | None = None
    if resume and ckpt_path.exists():
        resumed = load_checkpoint(ckpt_path)
        if resumed.stage != STAGE2:
            raise ParameterError(f"{ckpt_path} is a stage {resumed.stage} checkpoint")
        bundle = resumed.bundle
        start_epoch = resumed.epoch
        extra = resumed.extra
        log.at_epoch(start_epoch).info(f"Resuming stage 2 at epoch {start_epoch}")
    else:
        bundle = load_checkpoint(stage1_checkpoint).bundle
        bundle.unfreeze(NETWORK_NAMES)
        bundle.freeze(STAGE1_FROZEN)
        extra = {
            "stage1_checkpoint": str(stage1_checkpoint),
            "frozen_checksums": {name: bundle.checksum(name) for name in STAGE1_FROZEN},
            "task_pretrain_loss": None,
        }
        if cfg.uses_task and cfg.pretrain_epochs > 0 and targets is not None:
            extra["task_pretrain_loss"] = pretrain_task_head(
                bundle,
                clean,
                targets,
                epochs=cfg.pretrain_epochs,
                lr=cfg.pretrain_lr,
                batch_size=cfg.batch_size,
                seed=cfg.seed,
            )

    trainable = ["alignment", "task_head"] if cfg.uses_task else ["alignment"]
    optimizer = torch.optim.Adam(bundle.parameters(trainable), lr=cfg.lr_initial)
    if resumed is not None:
        optimizer.load_state_dict(resumed.optimizer_states["align"])

    metrics = StageMetrics(stage=STAGE2)
    dtype = bundle.dtype
    bundle.train()
    with MetricsRecorder(
        metrics_path,
        PARTS,
        log_wall_time=cfg.log_wall_time,
        resume_epoch=start_epoch if resumed is not None else None,
    ) as recorder:
        for epoch in range(start_epoch, cfg.max_epochs):
            started = time.perf_counter()
            epoch_log = log.at_epoch(epoch)
            metrics.reset()
            _set_lr(optimizer, lr_at_epoch(cfg.lr_initial, cfg.lr_final, cfg.lr_drop_epoch, epoch))
            for step, indices in enumerate(epoch_batches(len(clean), cfg.batch_size, cfg.seed, STAGE2, epoch)):
                x, y_star = degraded_batch(clean, indices, profile, cfg.seed, epoch, dtype)
                batch_targets = targets[torch.as_tensor(indices)] if targets is not None else None
                report = _checked(
                    loss_align(x, y_star, batch_targets, bundle, cfg, torch_generator(cfg.seed, STAGE2, epoch, step)),
                    epoch_log, step,
                )
                _step(optimizer, report)
                _record(recorder, metrics, epoch=epoch, step=step, loss="align", report=report,
                        lr=_current_lr(optimizer))
                metrics.step()

            recorder.flush()
            bundle.verify_frozen()
            save_checkpoint(
                ckpt_path,
                Checkpoint(
                    bundle=bundle,
                    stage=STAGE2,
                    epoch=epoch + 1,
                    optimizer_states={"align": optimizer.state_dict()},
                    extra={**extra, "stage2": cfg.to_dict()},
                ),
            )
            averages = metrics.averages()
            epoch_log.info(
                f"Stage 2 epoch {epoch}: align={averages.get('align.total', 0.0):.4f}",
                extra={"duration": time.perf_counter() - started},
            )

    bundle.verify_frozen()
    return StageResult(
        bundle=bundle,
        checkpoint_path=ckpt_path,
        metrics_path=metrics_path,
        epochs_completed=max(start_epoch, cfg.max_epochs),
        averages=metrics.averages(),
    )
