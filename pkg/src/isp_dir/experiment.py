"""Experiment configuration: one TOML file, flag overrides, resolved JSON echo.

Layout::

    seed = 0
    output_dir = "runs/desk"

    [data]       corpus, n, n_classes, size, profile, held_out
    [encoder]    in_channels, base_width, n_down, latent_channels
    [critic]     width, hidden
    [alignment]  width, m1, m2, m3, k, kernel_size
    [task]       kind, width  (n_classes comes from [data])
    [stage1]     Stage1Config fields
    [stage2]     Stage2Config fields plus stage1_checkpoint

The top-level seed is copied into both stage configs, and the encoder's
latent width into the alignment config, so each value is set in one place.
"""

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .data.corpus import ToySample, gen_toy_corpus, held_out_split, read_corpus
from .errors import InputError, ParameterError, UsageError
from .isp.base import PROFILES
from .logging_config import get_logger
from .models.alignment import AlignmentConfig
from .models.bundle import BundleConfig
from .models.networks import CriticConfig, EncoderConfig, TaskConfig
from .training.config import Stage1Config, Stage2Config

logger = get_logger("experiment")

RESOLVED_NAME = "config.resolved.json"
SECTIONS = ("data", "encoder", "critic", "alignment", "task", "stage1", "stage2")
TOP_LEVEL_KEYS = ("seed", "output_dir")


@dataclass(frozen=True)
class DataConfig:
    """Where training images come from and how they are degraded.

    With ``corpus`` unset the toy corpus is generated in memory from the
    experiment seed.
    """

    corpus: str | None = None
    n: int = 200
    n_classes: int = 4
    size: int = 64
    profile: str = "default"
    held_out: float = 0.25

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ParameterError(f"data.n must be >= 2, got {self.n}")
        if self.profile not in PROFILES:
            raise ParameterError(f"data.profile must be one of {sorted(PROFILES)}, got {self.profile!r}")
        if not 0.0 <= self.held_out < 1.0:
            raise ParameterError(f"data.held_out must be in [0, 1), got {self.held_out}")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/desk"
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    critic: CriticConfig = field(default_factory=CriticConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    task_kind: str = "classification"
    task_width: int = 32
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)
    stage1_checkpoint: str | None = None

    @property
    def task(self) -> TaskConfig:
        return TaskConfig(n_classes=self.data.n_classes, kind=self.task_kind, width=self.task_width)

    @property
    def bundle_config(self) -> BundleConfig:
        return BundleConfig(encoder=self.encoder, critic=self.critic, alignment=self.alignment, task=self.task)

    def stage_dir(self, stage: int) -> Path:
        return Path(self.output_dir) / f"stage{stage}"

    def to_dict(self) -> dict[str, Any]:
        alignment = self.alignment.to_dict()
        alignment.pop("latent_channels")
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "data": asdict(self.data),
            "encoder": self.encoder.to_dict(),
            "critic": self.critic.to_dict(),
            "alignment": alignment,
            "task": {"kind": self.task_kind, "width": self.task_width},
            "stage1": self.stage1.to_dict(),
            "stage2": {**self.stage2.to_dict(), "stage1_checkpoint": self.stage1_checkpoint},
        }

    def write_resolved(self, directory: Path) -> Path:
        """Write the resolved config as JSON beside the outputs in ``directory``."""
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / RESOLVED_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


def _section(raw: dict[str, Any], name: str) -> dict[str, Any]:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ParameterError(f"[{name}] must be a table")
    return dict(value)


def _build(cls: type, data: dict[str, Any], section: str) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ParameterError(f"[{section}] has unknown keys: {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ParameterError(f"[{section}]: {e}") from e


def from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed TOML or a resolved JSON echo.

    Raises:
        ParameterError: On unknown sections/keys or out-of-range values
    """
    unknown = set(raw) - set(SECTIONS) - set(TOP_LEVEL_KEYS)
    if unknown:
        raise ParameterError(f"Unknown config entries: {sorted(unknown)}")

    seed = int(raw.get("seed", 0))
    data = _build(DataConfig, _section(raw, "data"), "data")
    encoder = _build(EncoderConfig, _section(raw, "encoder"), "encoder")
    critic = _build(CriticConfig, _section(raw, "critic"), "critic")

    alignment_raw = _section(raw, "alignment")
    alignment_raw.pop("latent_channels", None)
    alignment = _build(AlignmentConfig, {**alignment_raw, "latent_channels": encoder.latent_channels}, "alignment")

    task_raw = _section(raw, "task")
    task_raw.pop("n_classes", None)
    extra_task = set(task_raw) - {"kind", "width"}
    if extra_task:
        raise ParameterError(f"[task] has unknown keys: {sorted(extra_task)}")

    stage1 = _build(Stage1Config, {**_section(raw, "stage1"), "seed": seed}, "stage1")
    stage2_raw = _section(raw, "stage2")
    stage1_checkpoint = stage2_raw.pop("stage1_checkpoint", None)
    stage2 = _build(Stage2Config, {**stage2_raw, "seed": seed}, "stage2")

    config = ExperimentConfig(
        seed=seed,
        output_dir=str(raw.get("output_dir", "runs/desk")),
        data=data,
        encoder=encoder,
        critic=critic,
        alignment=alignment,
        task_kind=str(task_raw.get("kind", "classification")),
        task_width=int(task_raw.get("width", 32)),
        stage1=stage1,
        stage2=stage2,
        stage1_checkpoint=stage1_checkpoint,
    )
    _ = config.task
    return config


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse a TOML config, or JSON when the suffix is ``.json``.

    Raises:
        InputError: If the file is missing or cannot be parsed
    """
    if not path.is_file():
        raise InputError(f"Config file not found: {path}", hint="pass --config with an existing TOML file")
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text())
        with path.open("rb") as f:
            return tomllib.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise InputError(f"Cannot parse config {path}: {e}") from e


def parse_literal(text: str) -> Any:
    """Value of a ``--set`` override: a TOML literal, else the bare string."""
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply ``section.key=value`` (or top-level ``key=value``) overrides.

    Raises:
        UsageError: If an override is not of the form key=value
    """
    merged = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        parsed = parse_literal(value)
        section, dot, name = key.partition(".")
        if dot:
            merged.setdefault(section, {})[name] = parsed
        else:
            merged[key] = parsed
        logger.debug(f"Config override {key}={parsed!r}")
    return merged


def load_experiment(
    path: Path | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    """Resolve the experiment config: file, then ``--set`` overrides, then ``--seed``."""
    raw = read_config_file(path) if path is not None else {}
    raw = apply_overrides(raw, overrides or [])
    if seed is not None:
        raw["seed"] = seed
    return from_dict(raw)


def experiment_samples(config: ExperimentConfig) -> tuple[list[ToySample], list[ToySample]]:
    """(train, held-out test) samples for an experiment.

    Reads ``data.corpus`` when set, otherwise regenerates the toy corpus from
    the experiment seed; the split is keyed by the same seed.

    Raises:
        InputError: If the corpus folder has no manifest
    """
    data = config.data
    if data.corpus is not None:
        samples = read_corpus(Path(data.corpus))
    else:
        samples = gen_toy_corpus(data.n, data.n_classes, np.random.default_rng(config.seed), data.size)
    if data.held_out == 0.0:
        return list(samples), []
    return held_out_split(samples, data.held_out, config.seed)
