"""Diagonal Gaussian posteriors over latent grids.

Tensors are shaped (..., C, h, w); any leading batch dimensions are allowed
and all reductions sum over every element.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import torch

from ..errors import DimensionError

LOGVAR_MIN = -14.0
LOGVAR_MAX = 14.0


@dataclass(eq=False)
class DiagonalGaussian:
    """Mean/log-variance pair; logvar is clamped to [-14, 14] on construction."""

    mean: torch.Tensor
    logvar: torch.Tensor

    def __post_init__(self) -> None:
        if self.mean.shape != self.logvar.shape:
            raise DimensionError(
                f"mean and logvar shapes differ: {tuple(self.mean.shape)} vs {tuple(self.logvar.shape)}"
            )
        self.logvar = torch.clamp(self.logvar, LOGVAR_MIN, LOGVAR_MAX)

    @property
    def shape(self) -> torch.Size:
        return self.mean.shape

    @property
    def variance(self) -> torch.Tensor:
        return torch.exp(self.logvar)

    @classmethod
    def standard(cls, shape: tuple[int, ...], dtype: torch.dtype = torch.float32) -> "DiagonalGaussian":
        """N(0, I) of the given shape."""
        return cls(torch.zeros(shape, dtype=dtype), torch.zeros(shape, dtype=dtype))

    def detach(self) -> "DiagonalGaussian":
        return DiagonalGaussian(self.mean.detach(), self.logvar.detach())


def _check_shapes(g1: DiagonalGaussian, g2: DiagonalGaussian) -> None:
    if g1.shape != g2.shape:
        raise DimensionError(
            f"Gaussian shapes differ: {tuple(g1.shape)} vs {tuple(g2.shape)}"
        )


def sample(g: DiagonalGaussian, generator: torch.Generator | None = None) -> torch.Tensor:
    """Reparameterized draw mean + exp(logvar / 2) * eps."""
    eps = torch.randn(
        g.mean.shape, generator=generator, dtype=g.mean.dtype, device=g.mean.device
    )
    return g.mean + torch.exp(0.5 * g.logvar) * eps


def kl_to_standard_normal(g: DiagonalGaussian) -> torch.Tensor:
    """KL(g || N(0, I)) summed over all elements."""
    return 0.5 * torch.sum(torch.exp(g.logvar) + g.mean**2 - 1.0 - g.logvar)


def kl(g1: DiagonalGaussian, g2: DiagonalGaussian) -> torch.Tensor:
    """Closed-form KL(g1 || g2) summed over all elements.

    Raises:
        DimensionError: If shapes differ
    """
    _check_shapes(g1, g2)
    ratio = torch.exp(g1.logvar - g2.logvar)
    mahalanobis = (g2.mean - g1.mean) ** 2 * torch.exp(-g2.logvar)
    return 0.5 * torch.sum(ratio + mahalanobis - 1.0 + g2.logvar - g1.logvar)


def poe(g1: DiagonalGaussian, g2: DiagonalGaussian) -> DiagonalGaussian:
    """Product of two Gaussian experts: precisions add, means are precision-weighted.

    Raises:
        DimensionError: If shapes differ
    """
    _check_shapes(g1, g2)
    # p1 / (p1 + p2) == sigmoid(logvar2 - logvar1)
    w1 = torch.sigmoid(g2.logvar - g1.logvar)
    mean = w1 * g1.mean + (1.0 - w1) * g2.mean
    logvar = -torch.logaddexp(-g1.logvar, -g2.logvar)
    return DiagonalGaussian(mean, logvar)


def save_latent(path: Path, latent: torch.Tensor, *, role: str, source_id: str) -> Path:
    """Dump a latent grid as little-endian float32 plus a JSON header.

    Writes ``<path>.bin`` and ``<path>.json``.

    Returns:
        Path of the binary file
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    array = latent.detach().cpu().numpy().astype("<f4")
    binary = path.with_suffix(".bin")
    binary.write_bytes(array.tobytes(order="C"))
    header: dict[str, Any] = {
        "shape": list(array.shape),
        "dtype": "float32",
        "byte_order": "little",
        "role": role,
        "source_id": source_id,
    }
    path.with_suffix(".json").write_text(json.dumps(header, indent=2))
    return binary


def load_latent(path: Path) -> tuple[torch.Tensor, dict[str, Any]]:
    """Read a latent grid written by save_latent."""
    header = json.loads(path.with_suffix(".json").read_text())
    array = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f4")
    return torch.from_numpy(array.reshape(header["shape"]).copy()), header
