"""Randomized degradation synthesis: clean RGB -> RAW -> noisy RAW -> degraded RGB."""

import numpy as np

from .base import CANONICAL_PARAMS, DegradationProfile, ImageRGB, IspParams
from .jpeg import jpeg_quantize
from .noise import add_sensor_noise
from .pipeline import apply_forward_isp, apply_inverse_isp

SEED_BOUND = 2**63


def _uniform(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def sample_ccm(rng: np.random.Generator, offdiag: tuple[float, float]) -> tuple[tuple[float, float, float], ...]:
    """Identity plus uniform off-diagonal perturbation, rows renormalized to sum to 1."""
    ccm = np.eye(3)
    for i in range(3):
        for j in range(3):
            if i != j:
                ccm[i, j] = _uniform(rng, offdiag)
    ccm = ccm / ccm.sum(axis=1, keepdims=True)
    return tuple(tuple(float(v) for v in row) for row in ccm)  # type: ignore[return-value]


def sample_params(profile: DegradationProfile, rng: np.random.Generator) -> IspParams:
    """Draw one ISP configuration uniformly from a profile's ranges."""
    wb_gains = (
        _uniform(rng, profile.wb_gain),
        _uniform(rng, profile.wb_gain),
        _uniform(rng, profile.wb_gain),
    )
    ccm = sample_ccm(rng, profile.ccm_offdiag)
    gamma = _uniform(rng, profile.gamma)
    gauss_sigma = _uniform(rng, profile.gauss_sigma)
    poisson_lambda = _uniform(rng, profile.poisson_lambda)
    qf_lo, qf_hi = profile.jpeg_qf
    jpeg_qf = int(rng.integers(qf_lo, qf_hi + 1))
    seed = int(rng.integers(0, SEED_BOUND))
    return IspParams(
        wb_gains=wb_gains,
        ccm=ccm,
        gamma=gamma,
        gauss_sigma=gauss_sigma,
        poisson_lambda=poisson_lambda,
        jpeg_qf=jpeg_qf,
        seed=seed,
    ).validate()


def degrade(clean: ImageRGB, params: IspParams) -> ImageRGB:
    """Render a degraded observation of a clean image.

    The clean image is unprocessed through the canonical camera, noise is added
    in RAW space with a generator seeded from ``params.seed``, and the result is
    re-rendered with ``params`` and JPEG-quantized.
    """
    raw = apply_inverse_isp(clean, CANONICAL_PARAMS)
    noisy = add_sensor_noise(
        raw, params.gauss_sigma, params.poisson_lambda, np.random.default_rng(params.seed)
    )
    rendered = apply_forward_isp(noisy, params)
    return jpeg_quantize(rendered, params.jpeg_qf)


def make_pair(
    clean: ImageRGB,
    profile: DegradationProfile,
    rng: np.random.Generator,
) -> tuple[ImageRGB, ImageRGB]:
    """Two independently degraded views of the same clean image."""
    first = sample_params(profile, rng)
    second = sample_params(profile, rng)
    return degrade(clean, first), degrade(clean, second)
