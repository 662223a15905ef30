"""Finite-difference verification of the training losses.

Every trainable parameter of the networks a loss touches is perturbed by
±step and the central difference is compared with the autograd gradient.
The check runs in float64 on a miniature bundle; each loss evaluation draws
its noise from a freshly seeded generator, so the loss is a deterministic
function of the parameters. A coordinate that disagrees is measured again
with a tenth of the step, since the L1 terms have kinks.
"""

from collections.abc import Callable
from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ParameterError
from ..logging_config import get_logger
from ..models.bundle import STAGE1_FROZEN, ModelBundle, miniature_config
from ..utils.seeding import torch_generator
from .config import Stage1Config, Stage2Config
from .losses import loss_align, loss_dfr, loss_dir

logger = get_logger("training.grad_check")

LOSS_NETWORKS: dict[str, tuple[str, ...]] = {
    "loss_dir": ("dir_encoder", "critic"),
    "loss_dfr": ("dfr_encoder", "decoder", "dfr_critic"),
    "loss_align": ("alignment", "task_head"),
}

MINIATURE_SIZE = 16
MINIATURE_BATCH = 2
DEFAULT_STEP = 1e-5
# Denominator floor for parameters whose gradient is (numerically) zero
GRAD_FLOOR = 1e-4
KINK_RETRY_ERROR = 1e-6


@dataclass
class GradCheckResult:
    loss_name: str
    max_rel_error: float
    worst_parameter: str
    n_checked: int

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error <= tolerance


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), GRAD_FLOOR)


def _randomize_zero_layers(bundle: ModelBundle, generator: torch.Generator) -> None:
    # Zero-initialized critic outputs make every upstream gradient vanish
    with torch.no_grad():
        for _, net in bundle:
            for module in net.modules():
                if isinstance(module, nn.Linear) and not module.weight.any():
                    module.weight.normal_(0.0, 0.5, generator=generator)
                    module.bias.normal_(0.0, 0.1, generator=generator)


def _bimodal(u: torch.Tensor) -> torch.Tensor:
    """Map [0, 1) onto [0.02, 0.2) ∪ [0.8, 0.98)."""
    low = 0.02 + 0.36 * u
    return torch.where(u < 0.5, low, low + 0.6)


def _miniature_inputs(seed: int, n_classes: int) -> dict[str, torch.Tensor]:
    g = torch_generator(seed, 0)
    shape = (MINIATURE_BATCH, 3, MINIATURE_SIZE, MINIATURE_SIZE)
    return {
        "x1": 0.05 + 0.9 * torch.rand(shape, generator=g, dtype=torch.float64),
        "x2": 0.05 + 0.9 * torch.rand(shape, generator=g, dtype=torch.float64),
        # Targets sit at least 0.3 away from 0.5, where untrained decoders output
        "y": _bimodal(torch.rand(shape, generator=g, dtype=torch.float64)),
        "labels": torch.randint(0, n_classes, (MINIATURE_BATCH,), generator=g),
    }


def make_loss_fn(loss_name: str, bundle: ModelBundle, seed: int = 0) -> Callable[[], torch.Tensor]:
    """A zero-argument closure evaluating the named loss on fixed miniature inputs.

    Raises:
        ParameterError: If the loss name is unknown
    """
    inputs = _miniature_inputs(seed, bundle.config.task.n_classes)
    stage1 = Stage1Config(lambda_weight=1.0, beta_weight=0.5, beta_star=1.0)
    stage2 = Stage2Config.preset("classification")

    def generator() -> torch.Generator:
        return torch_generator(seed, 1)

    if loss_name == "loss_dir":
        return lambda: loss_dir(inputs["x1"], inputs["x2"], bundle, stage1, generator()).total
    if loss_name == "loss_dfr":
        return lambda: loss_dfr(inputs["y"], bundle, stage1, generator()).total
    if loss_name == "loss_align":
        return lambda: loss_align(
            inputs["x1"], inputs["y"], inputs["labels"], bundle, stage2, generator()
        ).total
    raise ParameterError(f"Unknown loss {loss_name!r}; choose from {sorted(LOSS_NETWORKS)}")


def miniature_bundle(seed: int = 0) -> ModelBundle:
    """Float64 miniature bundle with every critic output layer randomized."""
    bundle = ModelBundle.build(miniature_config(), seed=seed, dtype=torch.float64)
    _randomize_zero_layers(bundle, torch_generator(seed, 2))
    return bundle


def _central_difference(loss_fn: Callable[[], torch.Tensor], flat: torch.Tensor, i: int, step: float) -> float:
    original = float(flat[i])
    flat[i] = original + step
    plus = float(loss_fn())
    flat[i] = original - step
    minus = float(loss_fn())
    flat[i] = original
    return (plus - minus) / (2.0 * step)


def check_loss_gradients(
    loss_name: str,
    bundle: ModelBundle | None = None,
    *,
    step: float = DEFAULT_STEP,
    seed: int = 0,
) -> GradCheckResult:
    """Compare autograd and central-difference gradients for one loss."""
    if loss_name not in LOSS_NETWORKS:
        raise ParameterError(f"Unknown loss {loss_name!r}; choose from {sorted(LOSS_NETWORKS)}")
    bundle = bundle if bundle is not None else miniature_bundle(seed)
    if loss_name == "loss_align" and not bundle.frozen:
        bundle.freeze(STAGE1_FROZEN)
    loss_fn = make_loss_fn(loss_name, bundle, seed)

    named = [
        (f"{net}.{pname}", p)
        for net in LOSS_NETWORKS[loss_name]
        for pname, p in bundle[net].named_parameters()
        if p.requires_grad
    ]
    params = [p for _, p in named]
    grads = torch.autograd.grad(loss_fn(), params, allow_unused=True)

    worst, worst_name, checked = 0.0, "", 0
    with torch.no_grad():
        for (name, p), grad in zip(named, grads, strict=True):
            analytic = torch.zeros_like(p) if grad is None else grad
            flat = p.view(-1)
            for i in range(flat.numel()):
                expected = float(analytic.view(-1)[i])
                err = relative_error(expected, _central_difference(loss_fn, flat, i, step))
                if err > KINK_RETRY_ERROR:
                    # The ±step interval may straddle an L1 kink; remeasure inside it
                    retry = relative_error(expected, _central_difference(loss_fn, flat, i, step / 10.0))
                    err = min(err, retry)
                checked += 1
                if err > worst:
                    worst, worst_name = err, f"{name}[{i}]"

    logger.info(
        f"Gradient check {loss_name}: max relative error {worst:.3e} over {checked} parameters",
        extra={"part": loss_name},
    )
    return GradCheckResult(loss_name, worst, worst_name, checked)


def grad_check(loss_name: str, bundle: ModelBundle | None = None, tolerance: float = 1e-4) -> float:
    """Max relative gradient error of a loss on the miniature bundle.

    ``tolerance`` only controls the log level of the summary; the caller
    decides what to do with the returned error.
    """
    result = check_loss_gradients(loss_name, bundle)
    if not result.passed(tolerance):
        logger.warning(
            f"Gradient check {loss_name} exceeds tolerance {tolerance}: "
            f"{result.max_rel_error:.3e} at {result.worst_parameter}"
        )
    return result.max_rel_error
