"""Forward and inverse camera ISP over RGGB mosaics.

Forward stage order: demosaic -> white balance -> CCM -> gamma encode -> clamp.
The inverse undoes the pointwise stages in reverse order and re-mosaics.
"""

import numpy as np
from scipy import ndimage

from ..errors import DimensionError, ParameterError
from .base import BayerRaw, FloatArray, ImageRGB, IspParams

# Bilinear kernels for zero-filled channel planes. The centre weight is 1, so
# sampled sites are reproduced exactly.
_KERNEL_RB = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]]) / 4.0
_KERNEL_G = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]]) / 4.0

MAX_CCM_CONDITION = 1e6


def cfa_masks(height: int, width: int) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Return float masks (R, G, B) marking the sites each channel is sampled at."""
    rows = np.arange(height)[:, None] % 2
    cols = np.arange(width)[None, :] % 2
    red = (rows == 0) & (cols == 0)
    blue = (rows == 1) & (cols == 1)
    green = ~(red | blue)
    return red.astype(np.float64), green.astype(np.float64), blue.astype(np.float64)


def mosaic(rgb: ImageRGB) -> BayerRaw:
    """Sample an RGB image through the RGGB colour filter array.

    Raises:
        DimensionError: If height or width is odd
    """
    if rgb.height % 2 or rgb.width % 2:
        raise DimensionError(
            f"mosaic requires even dimensions, got {rgb.height}×{rgb.width}"
        )
    px = rgb.pixels
    raw = np.empty((rgb.height, rgb.width), dtype=np.float64)
    raw[0::2, 0::2] = px[0::2, 0::2, 0]
    raw[0::2, 1::2] = px[0::2, 1::2, 1]
    raw[1::2, 0::2] = px[1::2, 0::2, 1]
    raw[1::2, 1::2] = px[1::2, 1::2, 2]
    return BayerRaw(raw)


def demosaic_bilinear(raw: BayerRaw) -> ImageRGB:
    """Bilinearly interpolate the two missing channels at every site.

    Borders use mirror padding (reflection about the edge pixel), which keeps
    the CFA parity of padded samples intact.
    """
    red_mask, green_mask, blue_mask = cfa_masks(raw.height, raw.width)
    planes = []
    for mask, kernel in ((red_mask, _KERNEL_RB), (green_mask, _KERNEL_G), (blue_mask, _KERNEL_RB)):
        sampled = raw.pixels * mask
        interpolated = ndimage.convolve(sampled, kernel, mode="mirror")
        # Restore the sampled values bit-for-bit
        planes.append(np.where(mask > 0, raw.pixels, interpolated))
    return ImageRGB(np.stack(planes, axis=-1))


def gamma_encode(linear: FloatArray, gamma: float) -> FloatArray:
    """Linear -> display space, v ** (1 / gamma) on the clamped range."""
    return np.clip(linear, 0.0, 1.0) ** (1.0 / gamma)


def gamma_decode(encoded: FloatArray, gamma: float) -> FloatArray:
    """Display -> linear space, v ** gamma on the clamped range."""
    return np.clip(encoded, 0.0, 1.0) ** gamma


def _apply_ccm(pixels: FloatArray, ccm: FloatArray) -> FloatArray:
    return np.einsum("ij,hwj->hwi", ccm, pixels)


def apply_forward_isp(raw: BayerRaw, params: IspParams) -> ImageRGB:
    """Render a RAW mosaic to RGB with the given ISP configuration."""
    rgb = demosaic_bilinear(raw).pixels
    rgb = rgb * np.asarray(params.wb_gains, dtype=np.float64)
    rgb = _apply_ccm(rgb, params.ccm_matrix)
    rgb = gamma_encode(rgb, params.gamma)
    return ImageRGB(np.clip(rgb, 0.0, 1.0))


def invert_ccm(params: IspParams) -> FloatArray:
    """Invert the colour correction matrix.

    Raises:
        ParameterError: If the CCM is singular or badly conditioned
    """
    ccm = params.ccm_matrix
    condition = np.linalg.cond(ccm)
    if not np.isfinite(condition) or condition >= MAX_CCM_CONDITION:
        raise ParameterError(
            f"ccm is singular or ill-conditioned (condition number {condition:.3g})"
        )
    return np.linalg.inv(ccm)


def apply_inverse_isp(rgb: ImageRGB, params: IspParams) -> BayerRaw:
    """Unprocess an RGB image into the RAW mosaic the forward ISP would consume.

    Out-of-gamut values produced by the inversion are clamped to [0, 1].

    Raises:
        ParameterError: If the CCM cannot be inverted
    """
    inverse_ccm = invert_ccm(params)
    linear = gamma_decode(rgb.pixels, params.gamma)
    linear = _apply_ccm(linear, inverse_ccm)
    linear = linear / np.asarray(params.wb_gains, dtype=np.float64)
    return mosaic(ImageRGB(np.clip(linear, 0.0, 1.0)))
