"""Encoders, decoder, critics and the toy task head.

All networks are plain convolution stacks with SiLU activations and no
normalization layers, so a forward pass carries no hidden state and is
smooth in every parameter. Image tensors are (N, 3, H, W) in [0, 1];
latent tensors are (N, C, H / 2**n_down, W / 2**n_down).
"""

from collections.abc import Sequence
from dataclasses import asdict, dataclass
from typing import Any, Literal

import numpy as np
import torch
from torch import nn

from ..errors import DimensionError, ParameterError
from ..isp.base import ImageRGB
from .distributions import DiagonalGaussian, poe

TaskKind = Literal["classification", "segmentation"]
TASK_KINDS: tuple[str, ...] = ("classification", "segmentation")

# Channel multiplier of stage i is min(2 ** (i + 1), WIDTH_CAP)
WIDTH_CAP = 4


@dataclass(frozen=True)
class EncoderConfig:
    """Shape of an encoder and of the decoder that mirrors it."""

    in_channels: int = 3
    base_width: int = 32
    n_down: int = 3
    latent_channels: int = 64

    def __post_init__(self) -> None:
        for key in ("in_channels", "base_width", "n_down", "latent_channels"):
            if getattr(self, key) < 1:
                raise ParameterError(f"encoder {key} must be >= 1, got {getattr(self, key)}")

    @property
    def factor(self) -> int:
        """Spatial downsampling factor between image and latent grid."""
        return 2**self.n_down

    def stage_widths(self) -> list[int]:
        return [self.base_width * min(2 ** (i + 1), WIDTH_CAP) for i in range(self.n_down)]

    def latent_shape(self, height: int, width: int) -> tuple[int, int, int]:
        self.check_image_size(height, width)
        return (self.latent_channels, height // self.factor, width // self.factor)

    def check_image_size(self, height: int, width: int) -> None:
        if height % self.factor or width % self.factor:
            raise DimensionError(
                f"image size {height}×{width} is not divisible by {self.factor}"
            )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CriticConfig:
    width: int = 32
    hidden: int = 64

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TaskConfig:
    """Toy downstream task: global shape classification or per-pixel segmentation."""

    n_classes: int = 4
    kind: str = "classification"
    width: int = 32

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ParameterError(f"task needs at least 2 classes, got {self.n_classes}")
        if self.kind not in TASK_KINDS:
            raise ParameterError(f"task kind must be one of {TASK_KINDS}, got {self.kind!r}")

    @property
    def n_outputs(self) -> int:
        """Logit count; segmentation adds a background class."""
        return self.n_classes + 1 if self.kind == "segmentation" else self.n_classes

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def images_to_tensor(images: Sequence[ImageRGB], dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Stack RGB images into an (N, 3, H, W) tensor."""
    if not images:
        raise DimensionError("cannot stack an empty image list")
    stacked = np.stack([img.pixels for img in images]).transpose(0, 3, 1, 2)
    return torch.from_numpy(np.ascontiguousarray(stacked)).to(dtype)


def tensor_to_images(batch: torch.Tensor) -> list[ImageRGB]:
    """Split an (N, 3, H, W) tensor into clamped RGB images."""
    if batch.ndim != 4 or batch.shape[1] != 3:
        raise DimensionError(f"expected (N, 3, H, W), got {tuple(batch.shape)}")
    array = batch.detach().cpu().to(torch.float64).numpy().transpose(0, 2, 3, 1)
    return [ImageRGB(item) for item in array]


def _check_images(images: torch.Tensor, channels: int) -> None:
    if images.ndim != 4 or images.shape[1] != channels:
        raise DimensionError(
            f"expected image tensor (N, {channels}, H, W), got {tuple(images.shape)}"
        )


class Encoder(nn.Module):
    """Convolutional VAE encoder producing a Gaussian over a latent grid."""

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        self.config = config
        widths = [config.base_width, *config.stage_widths()]
        layers: list[nn.Module] = [
            nn.Conv2d(config.in_channels, config.base_width, 3, padding=1),
            nn.SiLU(),
        ]
        for w_in, w_out in zip(widths[:-1], widths[1:], strict=True):
            layers += [nn.Conv2d(w_in, w_out, 4, stride=2, padding=1), nn.SiLU()]
        self.body = nn.Sequential(*layers)
        self.mean_head = nn.Conv2d(widths[-1], config.latent_channels, 1)
        self.logvar_head = nn.Conv2d(widths[-1], config.latent_channels, 1)

    def forward(self, images: torch.Tensor) -> DiagonalGaussian:
        _check_images(images, self.config.in_channels)
        self.config.check_image_size(int(images.shape[2]), int(images.shape[3]))
        features = self.body(images)
        return DiagonalGaussian(self.mean_head(features), self.logvar_head(features))


class Decoder(nn.Module):
    """Mirror of the encoder: transposed convolutions up to an RGB image in [0, 1]."""

    def __init__(self, config: EncoderConfig) -> None:
        super().__init__()
        self.config = config
        widths = [config.base_width, *config.stage_widths()][::-1]
        layers: list[nn.Module] = [
            nn.Conv2d(config.latent_channels, widths[0], 3, padding=1),
            nn.SiLU(),
        ]
        for w_in, w_out in zip(widths[:-1], widths[1:], strict=True):
            layers += [nn.ConvTranspose2d(w_in, w_out, 4, stride=2, padding=1), nn.SiLU()]
        layers += [nn.Conv2d(widths[-1], config.in_channels, 3, padding=1), nn.Sigmoid()]
        self.body = nn.Sequential(*layers)

    def forward(self, latents: torch.Tensor) -> torch.Tensor:
        if latents.ndim != 4 or latents.shape[1] != self.config.latent_channels:
            raise DimensionError(
                f"expected latent tensor (N, {self.config.latent_channels}, h, w), "
                f"got {tuple(latents.shape)}"
            )
        return self.body(latents)


def _zero_init(layer: nn.Linear) -> nn.Linear:
    nn.init.zeros_(layer.weight)
    nn.init.zeros_(layer.bias)
    return layer


class Critic(nn.Module):
    """Scores (image, latent) pairs for the Jensen-Shannon bound.

    The image branch is three stride-2 convolutions and a global average pool,
    the latent branch a global average pool; the concatenation feeds a
    two-layer MLP. The output layer starts at zero, so an untrained critic
    scores every pair 0.
    """

    def __init__(self, in_channels: int, latent_channels: int, config: CriticConfig) -> None:
        super().__init__()
        self.in_channels = in_channels
        self.latent_channels = latent_channels
        w = config.width
        self.image_branch = nn.Sequential(
            nn.Conv2d(in_channels, w, 4, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, w, 4, stride=2, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, w, 4, stride=2, padding=1),
            nn.SiLU(),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
        )
        self.latent_pool = nn.Sequential(nn.AdaptiveAvgPool2d(1), nn.Flatten())
        self.head = nn.Sequential(
            nn.Linear(w + latent_channels, config.hidden),
            nn.SiLU(),
            _zero_init(nn.Linear(config.hidden, 1)),
        )

    def forward(self, images: torch.Tensor, latents: torch.Tensor) -> torch.Tensor:
        _check_images(images, self.in_channels)
        if latents.ndim != 4 or latents.shape[:2] != (images.shape[0], self.latent_channels):
            raise DimensionError(
                f"latent batch {tuple(latents.shape)} does not match images {tuple(images.shape)}"
            )
        joint = torch.cat([self.image_branch(images), self.latent_pool(latents)], dim=1)
        return self.head(joint).squeeze(1)


class VectorCritic(nn.Module):
    """Concatenation critic for vector pairs: MLP([x, y]) -> scalar."""

    def __init__(self, x_dim: int, y_dim: int, hidden: int = 64) -> None:
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(x_dim + y_dim, hidden),
            nn.SiLU(),
            nn.Linear(hidden, hidden),
            nn.SiLU(),
            _zero_init(nn.Linear(hidden, 1)),
        )

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([x, y], dim=1)).squeeze(1)


class TaskHead(nn.Module):
    """Downstream network T applied to RGB images."""

    def __init__(self, config: TaskConfig, in_channels: int = 3) -> None:
        super().__init__()
        self.config = config
        self.in_channels = in_channels
        w = config.width
        if config.kind == "classification":
            self.body = nn.Sequential(
                nn.Conv2d(in_channels, w, 3, padding=1),
                nn.SiLU(),
                nn.Conv2d(w, w, 4, stride=2, padding=1),
                nn.SiLU(),
                nn.Conv2d(w, 2 * w, 4, stride=2, padding=1),
                nn.SiLU(),
                nn.Conv2d(2 * w, 2 * w, 4, stride=2, padding=1),
                nn.SiLU(),
                nn.AdaptiveAvgPool2d(1),
                nn.Flatten(),
                nn.Linear(2 * w, config.n_outputs),
            )
        else:
            self.body = nn.Sequential(
                nn.Conv2d(in_channels, w, 3, padding=1),
                nn.SiLU(),
                nn.Conv2d(w, w, 3, padding=2, dilation=2),
                nn.SiLU(),
                nn.Conv2d(w, w, 3, padding=4, dilation=4),
                nn.SiLU(),
                nn.Conv2d(w, config.n_outputs, 1),
            )

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        _check_images(images, self.in_channels)
        return self.body(images)


def encode(encoder: Encoder, images: torch.Tensor) -> DiagonalGaussian:
    """Posterior over the latent grid for a batch of images."""
    return encoder(images)


def encode_images(encoder: Encoder, images: Sequence[ImageRGB]) -> DiagonalGaussian:
    """Posterior over the latent grids of RGB images, stacked in the encoder's dtype."""
    param = next(encoder.parameters())
    return encoder(images_to_tensor(images, dtype=param.dtype))


def encode_joint(encoder: Encoder, x1: torch.Tensor, x2: torch.Tensor) -> DiagonalGaussian:
    """Two-view posterior p(r | x1, x2) as the product of the single-view experts."""
    return poe(encoder(x1), encoder(x2))


def decode(decoder: Decoder, latents: torch.Tensor) -> torch.Tensor:
    return decoder(latents)


def decode_images(decoder: Decoder, latents: torch.Tensor) -> list[ImageRGB]:
    """Decode (N, C, h, w) latent grids to clamped RGB images."""
    return tensor_to_images(decoder(latents))


def task_forward(task_head: TaskHead, images: torch.Tensor) -> torch.Tensor:
    """Class logits (N, n_classes) or per-pixel logits (N, n_classes + 1, H, W)."""
    return task_head(images)
