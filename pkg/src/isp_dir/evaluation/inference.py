"""Evaluation-time forward passes: posterior means throughout, no gradients."""

from collections.abc import Sequence

import torch

from ..isp.base import DegradationProfile, ImageRGB
from ..isp.degradation import degrade, sample_params
from ..models.alignment import AlignmentNetwork
from ..models.bundle import ModelBundle
from ..models.networks import decode_images, encode_images
from ..utils.seeding import derive_rng

EVAL_STREAM = 7


def degraded_test_set(clean: Sequence[ImageRGB], profile: DegradationProfile, seed: int) -> list[ImageRGB]:
    """One degraded view per clean image, keyed by (seed, index)."""
    return [
        degrade(img, sample_params(profile, derive_rng(seed, EVAL_STREAM, i)))
        for i, img in enumerate(clean)
    ]


@torch.no_grad()
def decode_baseline(bundle: ModelBundle, degraded: Sequence[ImageRGB]) -> list[ImageRGB]:
    """decode(mean r0): the restoration obtained without alignment."""
    return decode_images(bundle.decoder, encode_images(bundle.dir_encoder, degraded).mean)


@torch.no_grad()
def restore(
    bundle: ModelBundle,
    degraded: Sequence[ImageRGB],
    *,
    use_pilot: bool = True,
    alignment: AlignmentNetwork | None = None,
) -> list[ImageRGB]:
    """decode(A(r0, pilot)) with posterior means; a zero pilot when ``use_pilot`` is off.

    ``alignment`` substitutes another alignment network, e.g. one trained
    without the pilot.
    """
    r0 = encode_images(bundle.dir_encoder, degraded).mean
    pilot = encode_images(bundle.dfr_encoder, degraded).mean
    if not use_pilot:
        pilot = torch.zeros_like(pilot)
    network = alignment if alignment is not None else bundle.alignment
    return decode_images(bundle.decoder, network(r0, pilot))


@torch.no_grad()
def restored_tensor(bundle: ModelBundle, degraded: Sequence[ImageRGB]) -> torch.Tensor:
    r0 = encode_images(bundle.dir_encoder, degraded).mean
    return bundle.decoder(bundle.alignment(r0, encode_images(bundle.dfr_encoder, degraded).mean))
