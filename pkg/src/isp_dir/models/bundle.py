"""The set of named networks trained by the two stages, and its checkpoints."""

import hashlib
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch
from torch import nn

from ..errors import FrozenViolationError, InputError, UnknownNetworkError
from ..logging_config import get_logger
from ..utils.seeding import derive_seed
from .alignment import AlignmentConfig, AlignmentNetwork
from .networks import (
    Critic,
    CriticConfig,
    Decoder,
    Encoder,
    EncoderConfig,
    TaskConfig,
    TaskHead,
)

logger = get_logger("models.bundle")

CHECKPOINT_FORMAT_VERSION = 1

NETWORK_NAMES: tuple[str, ...] = (
    "dir_encoder",
    "dfr_encoder",
    "decoder",
    "critic",
    "dfr_critic",
    "alignment",
    "task_head",
)

STAGE1_FROZEN: tuple[str, ...] = ("dir_encoder", "dfr_encoder", "decoder")


@dataclass(frozen=True)
class BundleConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    critic: CriticConfig = field(default_factory=CriticConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    task: TaskConfig = field(default_factory=TaskConfig)

    def to_dict(self) -> dict[str, Any]:
        return {
            "encoder": self.encoder.to_dict(),
            "critic": self.critic.to_dict(),
            "alignment": self.alignment.to_dict(),
            "task": self.task.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BundleConfig":
        return cls(
            encoder=EncoderConfig(**data["encoder"]),
            critic=CriticConfig(**data["critic"]),
            alignment=AlignmentConfig(**data["alignment"]),
            task=TaskConfig(**data["task"]),
        )


def miniature_config(n_classes: int = 3, kind: str = "classification") -> BundleConfig:
    """Tiny configuration for gradient checks: 16×16 images, 4×2×2 latents."""
    return BundleConfig(
        encoder=EncoderConfig(base_width=2, n_down=3, latent_channels=4),
        critic=CriticConfig(width=3, hidden=5),
        alignment=AlignmentConfig(latent_channels=4, width=4, m1=2, m2=1, m3=2, k=2),
        task=TaskConfig(n_classes=n_classes, kind=kind, width=2),
    )


class ModelBundle:
    """Seven named networks with freezing and checksums.

    A frozen network has ``requires_grad`` turned off and its checksum
    recorded; ``verify_frozen`` raises if any frozen parameter has changed.
    """

    def __init__(self, config: BundleConfig, networks: dict[str, nn.Module]) -> None:
        missing = set(NETWORK_NAMES) - set(networks)
        if missing:
            raise UnknownNetworkError(f"bundle is missing networks: {sorted(missing)}")
        self.config = config
        self._networks = {name: networks[name] for name in NETWORK_NAMES}
        self._frozen: dict[str, str] = {}

    @classmethod
    def build(cls, config: BundleConfig, seed: int = 0, dtype: torch.dtype = torch.float32) -> "ModelBundle":
        """Instantiate every network with initialization drawn from ``seed``."""
        enc = config.encoder
        builders = {
            "dir_encoder": lambda: Encoder(enc),
            "dfr_encoder": lambda: Encoder(enc),
            "decoder": lambda: Decoder(enc),
            "critic": lambda: Critic(enc.in_channels, enc.latent_channels, config.critic),
            "dfr_critic": lambda: Critic(enc.in_channels, enc.latent_channels, config.critic),
            "alignment": lambda: AlignmentNetwork(config.alignment),
            "task_head": lambda: TaskHead(config.task, enc.in_channels),
        }
        networks: dict[str, nn.Module] = {}
        for index, name in enumerate(NETWORK_NAMES):
            with torch.random.fork_rng(devices=[]):
                torch.manual_seed(derive_seed(seed, index))
                networks[name] = builders[name]().to(dtype)
        return cls(config, networks)

    def __getitem__(self, name: str) -> nn.Module:
        try:
            return self._networks[name]
        except KeyError:
            raise UnknownNetworkError(
                f"Unknown network {name!r}; choose from {list(NETWORK_NAMES)}"
            ) from None

    def __iter__(self) -> Iterator[tuple[str, nn.Module]]:
        return iter(self._networks.items())

    @property
    def dir_encoder(self) -> Encoder:
        return self._networks["dir_encoder"]  # type: ignore[return-value]

    @property
    def dfr_encoder(self) -> Encoder:
        return self._networks["dfr_encoder"]  # type: ignore[return-value]

    @property
    def decoder(self) -> Decoder:
        return self._networks["decoder"]  # type: ignore[return-value]

    @property
    def critic(self) -> Critic:
        return self._networks["critic"]  # type: ignore[return-value]

    @property
    def dfr_critic(self) -> Critic:
        return self._networks["dfr_critic"]  # type: ignore[return-value]

    @property
    def alignment(self) -> AlignmentNetwork:
        return self._networks["alignment"]  # type: ignore[return-value]

    @property
    def task_head(self) -> TaskHead:
        return self._networks["task_head"]  # type: ignore[return-value]

    @property
    def dtype(self) -> torch.dtype:
        return next(self.dir_encoder.parameters()).dtype

    @property
    def frozen(self) -> frozenset[str]:
        return frozenset(self._frozen)

    def parameters(self, names: Iterable[str]) -> list[nn.Parameter]:
        """Parameters of the named networks, in bundle order."""
        params: list[nn.Parameter] = []
        for name in names:
            params.extend(self[name].parameters())
        return params

    def train(self, mode: bool = True) -> "ModelBundle":
        for net in self._networks.values():
            net.train(mode)
        return self

    def eval(self) -> "ModelBundle":
        return self.train(False)

    def checksum(self, name: str) -> str:
        """SHA-256 over the network's state dict, keys in sorted order."""
        digest = hashlib.sha256()
        state = self[name].state_dict()
        for key in sorted(state):
            tensor = state[key].detach().cpu().contiguous()
            digest.update(key.encode())
            digest.update(str(tensor.dtype).encode())
            digest.update(tensor.numpy().tobytes())
        return digest.hexdigest()

    def checksums(self) -> dict[str, str]:
        return {name: self.checksum(name) for name in NETWORK_NAMES}

    def freeze(self, names: Iterable[str]) -> None:
        for name in names:
            net = self[name]
            net.requires_grad_(False)
            self._frozen[name] = self.checksum(name)
            logger.debug(f"Froze {name}")

    def unfreeze(self, names: Iterable[str]) -> None:
        for name in names:
            self[name].requires_grad_(True)
            self._frozen.pop(name, None)

    def verify_frozen(self) -> None:
        """Raise if any frozen network's parameters differ from freeze time.

        Raises:
            FrozenViolationError: Naming the networks whose checksum drifted
        """
        drifted = [name for name, digest in self._frozen.items() if self.checksum(name) != digest]
        if drifted:
            raise FrozenViolationError(
                f"Frozen networks changed: {drifted}",
                details={"networks": drifted},
            )

    def state_dicts(self) -> dict[str, dict[str, torch.Tensor]]:
        return {name: net.state_dict() for name, net in self._networks.items()}

    def load_state_dicts(self, states: dict[str, dict[str, torch.Tensor]]) -> None:
        for name, state in states.items():
            self[name].load_state_dict(state)


def freeze(bundle: ModelBundle, names: Iterable[str]) -> None:
    bundle.freeze(names)


def checksum(bundle: ModelBundle, name: str) -> str:
    return bundle.checksum(name)


@dataclass
class Checkpoint:
    """Everything needed to evaluate a bundle or resume a stage.

    The learning rate is a pure function of the epoch, so no scheduler state
    is stored.
    """

    bundle: ModelBundle
    stage: int
    epoch: int
    optimizer_states: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """Write a checkpoint container with configs, states, frozen set and checksums."""
    bundle = checkpoint.bundle
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: dict[str, Any] = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": bundle.config.to_dict(),
        "dtype": str(bundle.dtype).removeprefix("torch."),
        "states": bundle.state_dicts(),
        "frozen": sorted(bundle.frozen),
        "checksums": bundle.checksums(),
        "stage": checkpoint.stage,
        "epoch": checkpoint.epoch,
        "optimizers": checkpoint.optimizer_states,
        "extra": checkpoint.extra,
    }
    torch.save(payload, path)
    logger.info(f"Saved checkpoint {path}", extra={"path": str(path), "epoch": checkpoint.epoch})
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """Restore a checkpoint; parameters round-trip bit-exactly.

    Raises:
        InputError: If the file is missing, unreadable, of another format
            version, or its stored checksums do not match the loaded weights
    """
    if not path.is_file():
        raise InputError(
            f"Checkpoint not found: {path}",
            hint="run `isp-dir train --stage 1` first or fix the checkpoint path",
        )
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise InputError(f"Cannot read checkpoint {path}: {e}") from e
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise InputError(
            f"Checkpoint {path} has format version {version}, expected {CHECKPOINT_FORMAT_VERSION}"
        )

    config = BundleConfig.from_dict(payload["config"])
    bundle = ModelBundle.build(config, dtype=getattr(torch, payload["dtype"]))
    bundle.load_state_dicts(payload["states"])
    if bundle.checksums() != payload["checksums"]:
        raise InputError(f"Checkpoint {path} is corrupt: checksums do not match weights")
    bundle.freeze(payload["frozen"])
    return Checkpoint(
        bundle=bundle,
        stage=int(payload["stage"]),
        epoch=int(payload["epoch"]),
        optimizer_states=payload["optimizers"],
        extra=payload["extra"],
    )
