"""Losses, schedules and the two training stages."""

from .config import Stage1Config, Stage2Config, lr_at_epoch
from .grad_check import GradCheckResult, check_loss_gradients, grad_check
from .losses import PARTS, LossReport, loss_align, loss_dfr, loss_dir
from .trainer import StageResult, pretrain_task_head, train_stage1, train_stage2

__all__ = [
    "PARTS",
    "GradCheckResult",
    "LossReport",
    "Stage1Config",
    "Stage2Config",
    "StageResult",
    "check_loss_gradients",
    "grad_check",
    "loss_align",
    "loss_dfr",
    "loss_dir",
    "lr_at_epoch",
    "pretrain_task_head",
    "train_stage1",
    "train_stage2",
]
