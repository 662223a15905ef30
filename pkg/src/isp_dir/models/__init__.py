"""Latent distributions, MI bounds and the networks of both training stages."""

from .alignment import AlignmentConfig, AlignmentNetwork, align
from .bundle import (
    NETWORK_NAMES,
    STAGE1_FROZEN,
    BundleConfig,
    Checkpoint,
    ModelBundle,
    checksum,
    freeze,
    load_checkpoint,
    miniature_config,
    save_checkpoint,
)
from .distributions import DiagonalGaussian, kl, kl_to_standard_normal, poe, sample
from .mi_estimation import (
    CriticBatch,
    cmi_upper_bound,
    d_akl,
    jsd_mi_lower_bound,
    shuffle_pairing,
    softplus,
)
from .networks import (
    CriticConfig,
    EncoderConfig,
    TaskConfig,
    decode,
    decode_images,
    encode,
    encode_images,
    encode_joint,
    images_to_tensor,
    task_forward,
    tensor_to_images,
)

__all__ = [
    "NETWORK_NAMES",
    "STAGE1_FROZEN",
    "AlignmentConfig",
    "AlignmentNetwork",
    "BundleConfig",
    "Checkpoint",
    "CriticBatch",
    "CriticConfig",
    "DiagonalGaussian",
    "EncoderConfig",
    "ModelBundle",
    "TaskConfig",
    "align",
    "checksum",
    "cmi_upper_bound",
    "d_akl",
    "decode",
    "decode_images",
    "encode",
    "encode_images",
    "encode_joint",
    "freeze",
    "images_to_tensor",
    "jsd_mi_lower_bound",
    "kl",
    "kl_to_standard_normal",
    "load_checkpoint",
    "miniature_config",
    "poe",
    "sample",
    "save_checkpoint",
    "shuffle_pairing",
    "softplus",
    "task_forward",
    "tensor_to_images",
]
