"""Variational mutual-information bounds.

The Jensen-Shannon lower bound is estimated from critic scores on paired
(joint) and shuffled (product-of-marginals) samples; the conditional-MI upper
bound is a KL between the two-view posterior and a single-view posterior.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import TypeVar, overload

import torch

from ..errors import BatchError, DimensionError
from .distributions import DiagonalGaussian, kl

T = TypeVar("T")


@dataclass(eq=False)
class CriticBatch:
    """Critic scores on N joint pairs and N shuffled pairs."""

    joint_scores: torch.Tensor
    marginal_scores: torch.Tensor

    def __post_init__(self) -> None:
        if self.joint_scores.ndim != 1 or self.marginal_scores.ndim != 1:
            raise DimensionError("critic scores must be 1-D")
        if self.joint_scores.numel() < 2 or self.marginal_scores.numel() < 2:
            raise BatchError(
                f"critic batch needs N >= 2, got {self.joint_scores.numel()}"
            )
        if not (
            torch.isfinite(self.joint_scores).all()
            and torch.isfinite(self.marginal_scores).all()
        ):
            raise BatchError("critic scores must be finite")


def softplus(t: torch.Tensor) -> torch.Tensor:
    """log(1 + e^t), stable at both tails.

    logaddexp(t, 0) evaluates as max(t, 0) + log1p(exp(-|t|)) and has the
    exact sigmoid gradient everywhere, including t = 0.
    """
    return torch.logaddexp(t, torch.zeros_like(t))


def jsd_mi_lower_bound(batch: CriticBatch) -> torch.Tensor:
    """E_joint[-softplus(-F)] - E_marginal[softplus(F)].

    Equals -2 ln 2 when the critic is identically zero and approaches 0 from
    below as the critic separates joint from marginal pairs.
    """
    joint_term = -softplus(-batch.joint_scores).mean()
    marginal_term = softplus(batch.marginal_scores).mean()
    return joint_term - marginal_term


def derangement(n: int, generator: torch.Generator | None = None) -> torch.Tensor:
    """A random permutation of range(n) with no fixed points.

    Rejection-samples uniform permutations; the expected number of draws is e.

    Raises:
        BatchError: If n < 2
    """
    if n < 2:
        raise BatchError(f"shuffle pairing needs at least 2 items, got {n}")
    identity = torch.arange(n)
    while True:
        perm = torch.randperm(n, generator=generator)
        if not bool((perm == identity).any()):
            return perm


@overload
def shuffle_pairing(latents: torch.Tensor, generator: torch.Generator | None = None) -> torch.Tensor: ...


@overload
def shuffle_pairing(latents: Sequence[T], generator: torch.Generator | None = None) -> list[T]: ...


def shuffle_pairing(latents: torch.Tensor | Sequence[T], generator: torch.Generator | None = None) -> torch.Tensor | list[T]:
    """Re-pair a batch so that no item keeps its own index.

    Accepts a batched tensor (shuffled along dim 0) or a sequence.

    Raises:
        BatchError: If fewer than 2 items are given
    """
    perm = derangement(len(latents), generator)
    if isinstance(latents, torch.Tensor):
        return latents[perm]
    return [latents[int(i)] for i in perm]


def cmi_upper_bound(joint: DiagonalGaussian, conditional: DiagonalGaussian) -> torch.Tensor:
    """KL(p(r | x1, x2) || p(r | x_i)): upper bound on the conditional MI term."""
    return kl(joint, conditional)


def d_akl(joint: DiagonalGaussian, cond1: DiagonalGaussian, cond2: DiagonalGaussian) -> torch.Tensor:
    """Average of the KLs from the joint posterior to each single-view posterior."""
    return 0.5 * (kl(joint, cond1) + kl(joint, cond2))
