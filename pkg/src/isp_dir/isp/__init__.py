"""Synthetic camera ISP: forward/inverse pipeline, noise, JPEG, and pair synthesis."""

from .base import (
    CANONICAL_PARAMS,
    IDENTITY_PARAMS,
    PROFILES,
    BayerRaw,
    DegradationProfile,
    ImageRGB,
    IspParams,
    get_profile,
)
from .degradation import degrade, make_pair, sample_params
from .jpeg import jpeg_quantize
from .noise import add_sensor_noise
from .pipeline import (
    apply_forward_isp,
    apply_inverse_isp,
    demosaic_bilinear,
    gamma_decode,
    gamma_encode,
    mosaic,
)

__all__ = [
    "CANONICAL_PARAMS",
    "IDENTITY_PARAMS",
    "PROFILES",
    "BayerRaw",
    "DegradationProfile",
    "ImageRGB",
    "IspParams",
    "add_sensor_noise",
    "apply_forward_isp",
    "apply_inverse_isp",
    "degrade",
    "demosaic_bilinear",
    "gamma_decode",
    "gamma_encode",
    "get_profile",
    "jpeg_quantize",
    "make_pair",
    "mosaic",
    "sample_params",
]
