"""Latent-space diagnostics: invariance ratio, latent dumps, PCA projection, pilot clustering."""

import csv
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from numpy.typing import NDArray

from ..errors import AcceptanceError, ParameterError, SampleSizeError
from ..isp.base import DegradationProfile, FloatArray, ImageRGB
from ..isp.degradation import degrade, sample_params
from ..logging_config import get_logger
from ..models.distributions import save_latent
from ..models.networks import Encoder, encode_images
from ..utils.seeding import derive_rng

logger = get_logger("evaluation.latents")

MIN_INVARIANCE_PAIRS = 50
# Eigenvalues below this fraction of the largest are treated as zero
RANK_TOLERANCE = 1e-10
CLUSTER_STREAM = 11


@torch.no_grad()
def latent_grids(encoder: Encoder, images: Sequence[ImageRGB], batch_size: int = 64) -> torch.Tensor:
    """Posterior-mean grids (N, C, h, w) in the encoder's dtype."""
    grids = [
        encode_images(encoder, images[start : start + batch_size]).mean
        for start in range(0, len(images), batch_size)
    ]
    return torch.cat(grids)


def mean_latents(encoder: Encoder, images: Sequence[ImageRGB], batch_size: int = 64) -> torch.Tensor:
    """Flattened posterior means, one row per image."""
    return latent_grids(encoder, images, batch_size).flatten(1).to(torch.float64)


def dump_latents(out_dir: Path, ids: Sequence[str], grids: Mapping[str, torch.Tensor]) -> list[Path]:
    """Write one ``<id>_<role>`` binary dump per image and role.

    Returns:
        Binary paths, grouped by image in ``ids`` order
    """
    paths = []
    for i, source_id in enumerate(ids):
        for role, grid in grids.items():
            paths.append(save_latent(out_dir / f"{source_id}_{role}", grid[i], role=role, source_id=source_id))
    return paths


@dataclass(frozen=True)
class InvarianceDistances:
    intra: float  # same content, different degradation
    inter: float  # different content

    @property
    def ratio(self) -> float:
        return self.intra / self.inter


def invariance_distances(encoder: Encoder, pairs: Sequence[tuple[ImageRGB, ImageRGB]]) -> InvarianceDistances:
    """Mean L2 distances between mean latents of matched and mismatched views.

    Raises:
        SampleSizeError: If fewer than 50 pairs are given
        ParameterError: If every latent coincides (ratio undefined)
    """
    if len(pairs) < MIN_INVARIANCE_PAIRS:
        raise SampleSizeError(
            f"latent invariance needs at least {MIN_INVARIANCE_PAIRS} pairs, got {len(pairs)}"
        )
    first = mean_latents(encoder, [a for a, _ in pairs])
    second = mean_latents(encoder, [b for _, b in pairs])
    dist = torch.cdist(first, second)
    n = dist.shape[0]
    intra = float(torch.diagonal(dist).mean())
    off_diagonal = ~torch.eye(n, dtype=torch.bool)
    inter = float(dist[off_diagonal].mean())
    if inter == 0.0:
        raise ParameterError("all latents coincide; invariance ratio is undefined")
    return InvarianceDistances(intra=intra, inter=inter)


def latent_invariance_ratio(encoder: Encoder, pairs: Sequence[tuple[ImageRGB, ImageRGB]]) -> float:
    """Intra-pair over inter-pair mean latent distance; smaller is more invariant."""
    return invariance_distances(encoder, pairs).ratio


def pca_project(latents: NDArray[np.float64] | torch.Tensor, dims: int = 2) -> FloatArray:
    """Project mean-centered rows onto the top principal directions.

    Each output column is flipped so that its largest-magnitude coordinate
    is positive. Directions with (numerically) zero variance give zero
    coordinates and a warning.

    Raises:
        SampleSizeError: If there are fewer than dims + 1 rows
    """
    data = latents.detach().cpu().numpy() if isinstance(latents, torch.Tensor) else latents
    data = np.asarray(data, dtype=np.float64).reshape(len(data), -1)
    n, d = data.shape
    if n < dims + 1:
        raise SampleSizeError(f"PCA to {dims} dims needs at least {dims + 1} points, got {n}")

    centered = data - data.mean(axis=0)
    if d <= n:
        eigvals, eigvecs = np.linalg.eigh(centered.T @ centered / (n - 1))
        order = np.argsort(eigvals)[::-1][:dims]
        coords = centered @ eigvecs[:, order]
        top = eigvals[order]
    else:
        # Same directions from the n×n Gram matrix when features outnumber points
        eigvals, eigvecs = np.linalg.eigh(centered @ centered.T)
        order = np.argsort(eigvals)[::-1][:dims]
        top = np.clip(eigvals[order], 0.0, None) / (n - 1)
        coords = eigvecs[:, order] * np.sqrt(np.clip(eigvals[order], 0.0, None))

    if len(top) < dims:
        coords = np.pad(coords, ((0, 0), (0, dims - len(top))))
        top = np.pad(top, (0, dims - len(top)))
    largest = max(float(top[0]), 0.0)
    degenerate = top <= RANK_TOLERANCE * largest if largest > 0 else np.ones(dims, dtype=bool)
    if degenerate.any():
        logger.warning(f"PCA input has reduced rank: {int(degenerate.sum())} of {dims} directions carry no variance")
        coords[:, degenerate] = 0.0

    for k in range(dims):
        pivot = int(np.argmax(np.abs(coords[:, k])))
        if coords[pivot, k] < 0:
            coords[:, k] = -coords[:, k]
    return coords


def write_projection_csv(path: Path, ids: Sequence[str], coords: FloatArray, groups: Sequence[str]) -> Path:
    """CSV with columns id, x, y, group."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "x", "y", "group"])
        for row_id, (x, y), group in zip(ids, coords[:, :2], groups, strict=True):
            writer.writerow([row_id, repr(float(x)), repr(float(y)), group])
    return path


@dataclass
class ClusterResult:
    """Pilot-DfR clustering outcome.

    Rows of ``coords`` are the reference DfRs followed by every pilot, in
    the order of ``ids``/``groups``.
    """

    accuracy: float
    coords: FloatArray
    ids: list[str]
    groups: list[str]

    @property
    def chance(self) -> float:
        return 1.0 / len(set(self.groups))

    def require_above_chance(self) -> None:
        """
        Raises:
            AcceptanceError: If nearest-reference assignment is no better than guessing
        """
        if self.accuracy <= self.chance:
            raise AcceptanceError(
                f"Pilot cluster accuracy {self.accuracy:.3f} is not above chance {self.chance:.3f}",
                details={"accuracy": self.accuracy, "chance": self.chance},
            )


def pilot_cluster_accuracy(
    dfr_encoder: Encoder,
    clean: Sequence[ImageRGB],
    n_degradations: int,
    profile: DegradationProfile,
    seed: int,
) -> ClusterResult:
    """Assign each pilot DfR to the nearest clean-image DfR and score the assignment.

    Every clean image is degraded ``n_degradations`` times; a pilot counts as
    correct when its nearest reference (L2 over mean latents) is the DfR of
    its own clean image.

    Raises:
        SampleSizeError: If fewer than 2 clean images are given
    """
    if len(clean) < 2:
        raise SampleSizeError(f"clustering needs at least 2 clean images, got {len(clean)}")
    references = mean_latents(dfr_encoder, clean)

    degraded: list[ImageRGB] = []
    owners: list[int] = []
    for k, img in enumerate(clean):
        for m in range(n_degradations):
            params = sample_params(profile, derive_rng(seed, CLUSTER_STREAM, k, m))
            degraded.append(degrade(img, params))
            owners.append(k)
    pilots = mean_latents(dfr_encoder, degraded)

    nearest = torch.cdist(pilots, references).argmin(dim=1)
    accuracy = float((nearest == torch.tensor(owners)).double().mean())

    coords = pca_project(torch.cat([references, pilots]))
    ids = [f"ref{k}" for k in range(len(clean))] + [f"img{k}_deg{m}" for k in range(len(clean)) for m in range(n_degradations)]
    groups = [f"img{k}" for k in range(len(clean))] + [f"img{k}" for k in owners]
    return ClusterResult(accuracy=accuracy, coords=coords, ids=ids, groups=groups)
