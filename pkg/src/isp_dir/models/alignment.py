"""Guided alignment network A(r0, pilot) -> r+.

A1 extracts features f from the baseline DiR r0. A2 modulates f twice under
the guidance of the pilot DfR: a G-Conv path whose depthwise 3×3 kernels are
generated per sample from the pilot, and a spatial attention path that gates
f with a pilot-conditioned map in [0, 1]. The two are added and A3 maps the
result back to the latent space.
"""

from dataclasses import asdict, dataclass
from typing import Any

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import DimensionError, ParameterError


@dataclass(frozen=True)
class AlignmentConfig:
    """Layer counts of A1/A2/A3, adaptive kernel count and feature width."""

    latent_channels: int = 64
    width: int = 64
    m1: int = 4
    m2: int = 2
    m3: int = 4
    k: int = 8
    kernel_size: int = 3

    def __post_init__(self) -> None:
        for key in ("latent_channels", "width", "m1", "m2", "m3", "k"):
            if getattr(self, key) < 1:
                raise ParameterError(f"alignment {key} must be >= 1, got {getattr(self, key)}")
        if self.width % self.k:
            raise ParameterError(
                f"alignment width {self.width} must be a multiple of k={self.k}"
            )
        if self.kernel_size % 2 == 0:
            raise ParameterError(f"kernel_size must be odd, got {self.kernel_size}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _conv_stack(c_in: int, width: int, layers: int, *, last_linear: bool = False, c_out: int | None = None) -> nn.Sequential:
    modules: list[nn.Module] = []
    for i in range(layers):
        src = c_in if i == 0 else width
        is_last = i == layers - 1
        dst = c_out if (is_last and c_out is not None) else width
        modules.append(nn.Conv2d(src, dst, 3, padding=1))
        if not (is_last and last_linear):
            modules.append(nn.SiLU())
    return nn.Sequential(*modules)


class KernelGenerator(nn.Module):
    """Pilot -> m2 convolutions -> spatial average -> k adaptive kernels."""

    def __init__(self, config: AlignmentConfig) -> None:
        super().__init__()
        self.config = config
        self.features = _conv_stack(config.latent_channels, config.width, config.m2)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.to_kernels = nn.Linear(config.width, config.k * config.kernel_size**2)

    def forward(self, pilot: torch.Tensor) -> torch.Tensor:
        """Kernels shaped (N, k, kernel_size, kernel_size)."""
        ks = self.config.kernel_size
        modulation = self.pool(self.features(pilot)).flatten(1)
        return self.to_kernels(modulation).view(-1, self.config.k, ks, ks)


class AlignmentNetwork(nn.Module):
    def __init__(self, config: AlignmentConfig) -> None:
        super().__init__()
        self.config = config
        c, w = config.latent_channels, config.width
        self.a1 = _conv_stack(c, w, config.m1)
        self.kernel_generator = KernelGenerator(config)
        self.gconv_mix = nn.Conv2d(w, w, 1)
        self.attention = nn.Sequential(
            nn.Conv2d(w + c, w, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(w, 1, 3, padding=1),
            nn.Sigmoid(),
        )
        self.a3 = _conv_stack(w, w, config.m3, last_linear=True, c_out=c)

    def adaptive_conv(self, features: torch.Tensor, kernels: torch.Tensor) -> torch.Tensor:
        """Depthwise convolution with per-sample kernels.

        Kernel j is shared by the block of width / k consecutive channels
        starting at j * width / k. The batch is folded into the channel axis
        so one grouped convolution serves every sample.
        """
        n, w, h, wd = features.shape
        ks = self.config.kernel_size
        per_kernel = w // self.config.k
        weight = kernels.repeat_interleave(per_kernel, dim=1).reshape(n * w, 1, ks, ks)
        out = F.conv2d(features.reshape(1, n * w, h, wd), weight, padding=ks // 2, groups=n * w)
        return self.gconv_mix(out.view(n, w, h, wd))

    def attention_map(self, features: torch.Tensor, pilot: torch.Tensor) -> torch.Tensor:
        """Spatial gate (N, 1, h, w) in [0, 1], conditioned on features and pilot."""
        return self.attention(torch.cat([features, pilot], dim=1))

    def forward(
        self,
        r0: torch.Tensor,
        pilot: torch.Tensor,
        attention: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Refined latent r+.

        Args:
            r0: Baseline DiR grid (N, C, h, w)
            pilot: Pilot DfR grid, same shape
            attention: Optional replacement for the computed attention map
        """
        if r0.shape != pilot.shape:
            raise DimensionError(
                f"r0 and pilot shapes differ: {tuple(r0.shape)} vs {tuple(pilot.shape)}"
            )
        if r0.ndim != 4 or r0.shape[1] != self.config.latent_channels:
            raise DimensionError(
                f"expected latent (N, {self.config.latent_channels}, h, w), got {tuple(r0.shape)}"
            )
        features = self.a1(r0)
        f_k = self.adaptive_conv(features, self.kernel_generator(pilot))
        gate = self.attention_map(features, pilot) if attention is None else attention
        f_a = features * gate
        return self.a3(f_k + f_a)


def align(alignment: AlignmentNetwork, r0: torch.Tensor, pilot: torch.Tensor) -> torch.Tensor:
    """Apply the guided alignment mapping A(r0, pilot)."""
    return alignment(r0, pilot)
