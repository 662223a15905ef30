"""JPEG quantization round trip.

The lossy part of baseline JPEG only: YCbCr conversion, 8×8 block DCT,
quantization with the Annex K tables scaled by the libjpeg quality rule,
and the inverse path. Entropy coding is lossless and is not reproduced.
Chroma is kept at full resolution (4:4:4).
"""

import numpy as np
from scipy import fft

from ..errors import ParameterError
from .base import FloatArray, ImageRGB

BLOCK = 8

LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)

CHROMA_TABLE = np.full((BLOCK, BLOCK), 99.0)
CHROMA_TABLE[:4, :4] = [
    [17, 18, 24, 47],
    [18, 21, 26, 66],
    [24, 26, 56, 99],
    [47, 66, 99, 99],
]

_RGB_TO_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCBCR_TO_RGB = np.array(
    [
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ]
)


def quantization_tables(qf: int) -> tuple[FloatArray, FloatArray]:
    """Scale the Annex K tables for a quality factor.

    Returns:
        (luma, chroma) tables with entries in [1, 255]

    Raises:
        ParameterError: If qf is outside [1, 100]
    """
    if not 1 <= qf <= 100:
        raise ParameterError(f"jpeg quality factor must be in [1, 100], got {qf}")
    scale = 5000.0 / qf if qf < 50 else 200.0 - 2.0 * qf
    tables = []
    for base in (LUMA_TABLE, CHROMA_TABLE):
        table = np.floor((base * scale + 50.0) / 100.0)
        tables.append(np.clip(table, 1.0, 255.0))
    return tables[0], tables[1]


def _to_blocks(plane: FloatArray) -> FloatArray:
    h, w = plane.shape
    return plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)


def _from_blocks(blocks: FloatArray) -> FloatArray:
    nh, nw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(nh * BLOCK, nw * BLOCK)


def _quantize_plane(plane: FloatArray, table: FloatArray) -> FloatArray:
    coeffs = fft.dctn(_to_blocks(plane), type=2, axes=(2, 3), norm="ortho")
    coeffs = np.round(coeffs / table) * table
    return _from_blocks(fft.idctn(coeffs, type=2, axes=(2, 3), norm="ortho"))


def jpeg_quantize(rgb: ImageRGB, qf: int) -> ImageRGB:
    """Apply the lossy JPEG round trip at quality factor qf.

    The image is edge-padded to a multiple of 8 and cropped back afterwards.

    Raises:
        ParameterError: If qf is outside [1, 100]
    """
    luma_table, chroma_table = quantization_tables(qf)
    h, w = rgb.height, rgb.width
    pad_h = (-h) % BLOCK
    pad_w = (-w) % BLOCK
    padded = np.pad(rgb.pixels * 255.0, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")

    ycc = np.einsum("ij,hwj->hwi", _RGB_TO_YCBCR, padded)
    ycc[..., 0] -= 128.0
    planes = [
        _quantize_plane(ycc[..., 0], luma_table),
        _quantize_plane(ycc[..., 1], chroma_table),
        _quantize_plane(ycc[..., 2], chroma_table),
    ]
    ycc = np.stack(planes, axis=-1)
    ycc[..., 0] += 128.0
    out = np.einsum("ij,hwj->hwi", _YCBCR_TO_RGB, ycc) / 255.0
    return ImageRGB(np.clip(out[:h, :w], 0.0, 1.0))
