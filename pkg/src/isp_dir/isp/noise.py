"""Sensor noise on RAW mosaics: Poisson shot noise followed by Gaussian read noise."""

import numpy as np

from ..errors import ParameterError
from .base import BayerRaw, FloatArray


def noisy_values(
    raw: BayerRaw,
    sigma: float,
    lam: float,
    rng: np.random.Generator,
) -> FloatArray:
    """Draw noisy RAW values without clamping.

    Shot noise is v <- lam * Poisson(v / lam), so Var = lam * v; read noise is
    additive N(0, sigma^2).

    Raises:
        ParameterError: If sigma or lam is negative
    """
    if sigma < 0 or lam < 0:
        raise ParameterError(
            f"noise magnitudes must be non-negative, got sigma={sigma}, lambda={lam}"
        )

    values = raw.pixels.copy()
    if lam > 0:
        values = rng.poisson(values / lam).astype(np.float64) * lam
    if sigma > 0:
        values = values + rng.normal(0.0, sigma, size=values.shape)
    return values


def add_sensor_noise(
    raw: BayerRaw,
    sigma: float,
    lam: float,
    rng: np.random.Generator,
) -> BayerRaw:
    """Add shot and read noise to a RAW mosaic and clamp to [0, 1].

    The result is a pure function of the inputs and the generator state.
    """
    return BayerRaw(np.clip(noisy_values(raw, sigma, lam, rng), 0.0, 1.0), cfa=raw.cfa)
