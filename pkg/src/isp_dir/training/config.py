"""Hyperparameters of the two training stages."""

from dataclasses import asdict, dataclass, fields, replace
from typing import Any

from ..errors import ParameterError

STAGE2_TASKS: tuple[str, ...] = ("restoration", "classification", "segmentation")

# Fraction of the run after which the learning rate drops in desk presets
DESK_DROP_FRACTION = 0.8
DESK_MAX_EPOCHS = 60


def _check_common(name: str, cfg: Any) -> None:
    if cfg.lr_initial <= 0 or cfg.lr_final <= 0:
        raise ParameterError(f"{name}: learning rates must be positive")
    if cfg.lr_final > cfg.lr_initial:
        raise ParameterError(
            f"{name}: lr_final ({cfg.lr_final}) must not exceed lr_initial ({cfg.lr_initial})"
        )
    if cfg.lr_drop_epoch < 1:
        raise ParameterError(f"{name}: lr_drop_epoch must be >= 1, got {cfg.lr_drop_epoch}")
    if cfg.max_epochs < 1:
        raise ParameterError(f"{name}: max_epochs must be >= 1, got {cfg.max_epochs}")
    if cfg.batch_size < 2:
        raise ParameterError(
            f"{name}: batch_size must be >= 2 for in-batch negatives, got {cfg.batch_size}"
        )


def _desk_schedule(epochs: int) -> dict[str, int]:
    if not 1 <= epochs <= DESK_MAX_EPOCHS:
        raise ParameterError(f"desk runs are capped at {DESK_MAX_EPOCHS} epochs, got {epochs}")
    return {"max_epochs": epochs, "lr_drop_epoch": max(1, round(epochs * DESK_DROP_FRACTION))}


def _from_dict(cls: type, data: dict[str, Any], section: str) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ParameterError(f"[{section}] has unknown keys: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class Stage1Config:
    """DiR/DfR learning.

    Defaults reproduce the full schedule: 1e-4 dropping to 1e-6 after epoch
    200. ``lambda_weight`` and ``beta_weight`` weight the redundancy and prior
    terms of the DiR loss; ``beta_star`` weights the DfR prior.
    """

    lambda_weight: float = 1.0
    beta_weight: float = 0.01
    beta_star: float = 1.0
    lr_initial: float = 1e-4
    lr_final: float = 1e-6
    lr_drop_epoch: int = 200
    max_epochs: int = 250
    batch_size: int = 16
    seed: int = 0
    log_wall_time: bool = True

    def __post_init__(self) -> None:
        for key in ("lambda_weight", "beta_weight", "beta_star"):
            if getattr(self, key) < 0:
                raise ParameterError(f"stage1: {key} must be >= 0, got {getattr(self, key)}")
        _check_common("stage1", self)

    @classmethod
    def desk(cls, epochs: int = DESK_MAX_EPOCHS, **overrides: Any) -> "Stage1Config":
        """Short run with the drop rescaled to 80% of ``epochs``."""
        return cls(**{**_desk_schedule(epochs), **overrides})

    def with_overrides(self, **overrides: Any) -> "Stage1Config":
        return replace(self, **overrides)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Stage1Config":
        return _from_dict(cls, data, "stage1")


@dataclass(frozen=True)
class Stage2Config:
    """Guided alignment.

    ``gamma1`` weights the task loss and ``gamma2`` the image reconstruction
    term. ``use_pilot=False`` trains the alignment network on a zero pilot
    grid. When ``gamma1 > 0`` the task head is first pretrained on clean
    images for ``pretrain_epochs`` and then optimized jointly.
    """

    gamma1: float = 0.0
    gamma2: float = 1.0
    lr_initial: float = 1e-3
    lr_final: float = 1e-6
    lr_drop_epoch: int = 300
    max_epochs: int = 350
    batch_size: int = 16
    seed: int = 0
    task: str = "restoration"
    use_pilot: bool = True
    pretrain_epochs: int = 10
    pretrain_lr: float = 1e-3
    log_wall_time: bool = True

    def __post_init__(self) -> None:
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ParameterError("stage2: gamma1 and gamma2 must be >= 0")
        if self.task not in STAGE2_TASKS:
            raise ParameterError(f"stage2: task must be one of {STAGE2_TASKS}, got {self.task!r}")
        if self.task == "restoration" and self.gamma1 != 0:
            raise ParameterError("stage2: restoration has no task loss; gamma1 must be 0")
        if self.pretrain_epochs < 0 or self.pretrain_lr <= 0:
            raise ParameterError("stage2: pretrain_epochs must be >= 0 and pretrain_lr > 0")
        _check_common("stage2", self)

    @property
    def uses_task(self) -> bool:
        return self.gamma1 > 0

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "Stage2Config":
        """Named loss-weight presets: restoration, classification, segmentation."""
        presets: dict[str, dict[str, Any]] = {
            "restoration": {"task": "restoration", "gamma1": 0.0, "gamma2": 1.0},
            "classification": {"task": "classification", "gamma1": 2.0, "gamma2": 1.0},
            "segmentation": {"task": "segmentation", "gamma1": 5.0, "gamma2": 1.0},
        }
        if name not in presets:
            raise ParameterError(f"Unknown stage2 preset {name!r}; choose from {sorted(presets)}")
        return cls(**{**presets[name], **overrides})

    @classmethod
    def desk(cls, name: str = "restoration", epochs: int = DESK_MAX_EPOCHS, **overrides: Any) -> "Stage2Config":
        return cls.preset(name, **{**_desk_schedule(epochs), **overrides})

    def with_overrides(self, **overrides: Any) -> "Stage2Config":
        return replace(self, **overrides)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Stage2Config":
        return _from_dict(cls, data, "stage2")


def lr_at_epoch(lr_initial: float, lr_final: float, lr_drop_epoch: int, epoch: int) -> float:
    """Piecewise-constant schedule: lr_initial before the drop epoch, lr_final from it on."""
    return lr_initial if epoch < lr_drop_epoch else lr_final
