"""The three training objectives and their per-part reports.

KL and prior terms are summed over latent elements and averaged over the
batch; reconstruction and latent alignment terms are mean absolute errors.
"""

import math
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from ..errors import NonFiniteLossError, ParameterError
from ..models.bundle import ModelBundle
from ..models.distributions import DiagonalGaussian, kl_to_standard_normal, poe, sample
from ..models.mi_estimation import CriticBatch, d_akl, jsd_mi_lower_bound, shuffle_pairing
from ..models.alignment import align
from ..models.networks import Critic, decode, encode, task_forward
from .config import Stage1Config, Stage2Config

PARTS: tuple[str, ...] = (
    "mi_x1",
    "mi_x2",
    "mi_y",
    "d_akl",
    "prior_kl",
    "recon",
    "latent_l1",
    "task",
)


@dataclass
class LossReport:
    """A scalar objective with its named parts and the weights combining them.

    ``total`` is the tensor that is back-propagated; it always equals
    ``sum(weights[p] * parts[p])``.
    """

    total: torch.Tensor
    parts: dict[str, torch.Tensor] = field(default_factory=dict)
    weights: dict[str, float] = field(default_factory=dict)

    @classmethod
    def combine(cls, parts: dict[str, torch.Tensor], weights: dict[str, float]) -> "LossReport":
        terms = [weights[name] * value for name, value in parts.items()]
        total = sum(terms[1:], terms[0])
        return cls(total=total, parts=parts, weights=weights)

    def values(self) -> dict[str, float]:
        """Detached part values as floats."""
        return {name: float(value.detach()) for name, value in self.parts.items()}

    def weighted_sum(self) -> float:
        return sum(self.weights[name] * v for name, v in self.values().items())

    def check_finite(self) -> "LossReport":
        """Raise on the first NaN or infinite part.

        Raises:
            NonFiniteLossError: Naming the offending part
        """
        for name, value in self.values().items():
            if not math.isfinite(value):
                raise NonFiniteLossError(name, value)
        total = float(self.total.detach())
        if not math.isfinite(total):
            raise NonFiniteLossError("total", total)
        return self


def _batch_mean(value: torch.Tensor, batch: int) -> torch.Tensor:
    return value / batch


def _posterior_draw(g: DiagonalGaussian, generator: torch.Generator | None, training: bool) -> torch.Tensor:
    return sample(g, generator) if training else g.mean


def critic_batch(critic: Critic, images: torch.Tensor, latents: torch.Tensor, generator: torch.Generator | None) -> CriticBatch:
    """Scores on matched (image, latent) pairs and on a deranged re-pairing."""
    return CriticBatch(
        joint_scores=critic(images, latents),
        marginal_scores=critic(images, shuffle_pairing(latents, generator)),
    )


def loss_dir(
    x1: torch.Tensor,
    x2: torch.Tensor,
    bundle: ModelBundle,
    cfg: Stage1Config,
    generator: torch.Generator | None = None,
) -> LossReport:
    """DiR objective on two degraded views of the same batch.

    -1/2 [I(r0; x1) + I(r0; x2)] + lambda * D_AKL + beta * KL(p(r0 | x1, x2) || N(0, I))
    with r0 drawn from the product-of-experts joint posterior.
    """
    n = int(x1.shape[0])
    g1 = encode(bundle.dir_encoder, x1)
    g2 = encode(bundle.dir_encoder, x2)
    joint = poe(g1, g2)
    r0 = sample(joint, generator)
    parts = {
        "mi_x1": jsd_mi_lower_bound(critic_batch(bundle.critic, x1, r0, generator)),
        "mi_x2": jsd_mi_lower_bound(critic_batch(bundle.critic, x2, r0, generator)),
        "d_akl": _batch_mean(d_akl(joint, g1, g2), n),
        "prior_kl": _batch_mean(kl_to_standard_normal(joint), n),
    }
    weights = {
        "mi_x1": -0.5,
        "mi_x2": -0.5,
        "d_akl": cfg.lambda_weight,
        "prior_kl": cfg.beta_weight,
    }
    return LossReport.combine(parts, weights)


def loss_dfr(
    y_star: torch.Tensor,
    bundle: ModelBundle,
    cfg: Stage1Config,
    generator: torch.Generator | None = None,
) -> LossReport:
    """DfR objective: -I(r*; y*) + L1 reconstruction + beta* * prior KL."""
    n = int(y_star.shape[0])
    g = encode(bundle.dfr_encoder, y_star)
    r_star = sample(g, generator)
    parts = {
        "mi_y": jsd_mi_lower_bound(critic_batch(bundle.dfr_critic, y_star, r_star, generator)),
        "recon": torch.mean(torch.abs(decode(bundle.decoder, r_star) - y_star)),
        "prior_kl": _batch_mean(kl_to_standard_normal(g), n),
    }
    weights = {"mi_y": -1.0, "recon": 1.0, "prior_kl": cfg.beta_star}
    return LossReport.combine(parts, weights)


@dataclass
class AlignmentOutputs:
    r0: torch.Tensor
    pilot: torch.Tensor
    r_star: torch.Tensor
    r_plus: torch.Tensor
    restored: torch.Tensor


def alignment_forward(
    x: torch.Tensor,
    y_star: torch.Tensor,
    bundle: ModelBundle,
    *,
    use_pilot: bool = True,
    training: bool = True,
    generator: torch.Generator | None = None,
) -> AlignmentOutputs:
    """Run the frozen encoders, the alignment network and the shared decoder.

    r0 and the pilot are posterior samples in training and posterior means
    otherwise; the target r* is always the DfR posterior mean of y*.
    """
    with torch.no_grad():
        r0 = _posterior_draw(encode(bundle.dir_encoder, x), generator, training)
        pilot = _posterior_draw(encode(bundle.dfr_encoder, x), generator, training)
        r_star = encode(bundle.dfr_encoder, y_star).mean
    if not use_pilot:
        pilot = torch.zeros_like(pilot)
    r_plus = align(bundle.alignment, r0, pilot)
    return AlignmentOutputs(r0, pilot, r_star, r_plus, decode(bundle.decoder, r_plus))


def task_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Cross-entropy for class labels (N,) or per-pixel masks (N, H, W)."""
    return F.cross_entropy(logits, targets)


def loss_align(
    x: torch.Tensor,
    y_star: torch.Tensor,
    targets: torch.Tensor | None,
    bundle: ModelBundle,
    cfg: Stage2Config,
    generator: torch.Generator | None = None,
    *,
    training: bool = True,
) -> LossReport:
    """Alignment objective: |r+ - r*|_1 + gamma1 * L_task + gamma2 * |D*(r+) - y*|_1.

    The task term is present only when gamma1 > 0.

    Raises:
        FrozenViolationError: If a frozen network drifted since it was frozen
    """
    bundle.verify_frozen()
    out = alignment_forward(
        x, y_star, bundle, use_pilot=cfg.use_pilot, training=training, generator=generator
    )
    parts = {
        "latent_l1": torch.mean(torch.abs(out.r_plus - out.r_star)),
        "recon": torch.mean(torch.abs(out.restored - y_star)),
    }
    weights = {"latent_l1": 1.0, "recon": cfg.gamma2}
    if cfg.uses_task:
        if targets is None:
            raise ParameterError("task loss requires targets when gamma1 > 0")
        parts["task"] = task_loss(task_forward(bundle.task_head, out.restored), targets)
        weights["task"] = cfg.gamma1
    return LossReport.combine(parts, weights)
