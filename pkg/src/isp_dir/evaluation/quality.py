"""Full-reference image quality: PSNR and single-scale SSIM."""

import math
from dataclasses import dataclass

import numpy as np
from skimage.filters import gaussian
from skimage.metrics import structural_similarity

from ..errors import DimensionError
from ..isp.base import FloatArray, ImageRGB

SSIM_SIGMA = 1.5
SSIM_TRUNCATE = 3.5
# Side of the Gaussian window skimage derives from sigma and truncate
SSIM_WINDOW = 2 * int(SSIM_TRUNCATE * SSIM_SIGMA + 0.5) + 1
SSIM_C1 = 0.01**2


def _check_same_shape(a: ImageRGB, b: ImageRGB) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise DimensionError(f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")


def _check_ssim_input(a: ImageRGB, b: ImageRGB) -> None:
    _check_same_shape(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise DimensionError(f"SSIM needs images of at least {SSIM_WINDOW}×{SSIM_WINDOW}")


def psnr(a: ImageRGB, b: ImageRGB) -> float:
    """10 log10(1 / MSE) with peak 1; ``math.inf`` for identical images.

    Raises:
        DimensionError: If the shapes differ
    """
    _check_same_shape(a, b)
    mse = float(np.mean((a.pixels - b.pixels) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


@dataclass(frozen=True)
class SsimComponents:
    """Mean SSIM and its two factors, averaged over channels and interior positions.

    ``contrast_structure`` is unchanged when the same constant is added to
    both images; ``luminance`` is not.
    """

    ssim: float
    luminance: float
    contrast_structure: float


def _local_mean(channel: FloatArray) -> FloatArray:
    return gaussian(channel, sigma=SSIM_SIGMA, truncate=SSIM_TRUNCATE, mode="reflect", preserve_range=True)


def ssim_components(a: ImageRGB, b: ImageRGB) -> SsimComponents:
    """Single-scale SSIM with a Gaussian window (sigma 1.5), split into its factors.

    The SSIM map comes from ``structural_similarity``; the luminance map is
    rebuilt from the same Gaussian local means and contrast-structure is the
    quotient of the two. Means skip the half-window border, as skimage does.

    Raises:
        DimensionError: If shapes differ or the image is smaller than the window
    """
    _check_ssim_input(a, b)
    mean_ssim, ssim_map = structural_similarity(
        a.pixels,
        b.pixels,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        data_range=1.0,
        channel_axis=-1,
        full=True,
    )

    lum_maps, cs_maps = [], []
    for ch in range(3):
        mu_x = _local_mean(a.pixels[..., ch])
        mu_y = _local_mean(b.pixels[..., ch])
        lum = (2.0 * mu_x * mu_y + SSIM_C1) / (mu_x**2 + mu_y**2 + SSIM_C1)
        lum_maps.append(lum)
        cs_maps.append(ssim_map[..., ch] / lum)

    pad = (SSIM_WINDOW - 1) // 2
    interior = (slice(pad, -pad), slice(pad, -pad))
    return SsimComponents(
        ssim=float(mean_ssim),
        luminance=float(np.mean([m[interior] for m in lum_maps])),
        contrast_structure=float(np.mean([m[interior] for m in cs_maps])),
    )


def ssim(a: ImageRGB, b: ImageRGB) -> float:
    """Mean SSIM in [-1, 1]; 1 for identical images."""
    _check_ssim_input(a, b)
    return float(
        structural_similarity(
            a.pixels,
            b.pixels,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            data_range=1.0,
            channel_axis=-1,
        )
    )
