"""Restoration and task reports over a held-out test set."""

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
import torch

from ..errors import AcceptanceError, DimensionError
from ..isp.base import ImageRGB
from ..logging_config import get_logger
from ..models.bundle import ModelBundle
from ..models.networks import images_to_tensor
from .inference import decode_baseline, restore, restored_tensor
from .quality import psnr, ssim

logger = get_logger("evaluation.ablation")

ABLATION_ROWS = ("r0", "+A", "+pilot")


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Plain-text table with right-aligned columns; floats at 4 decimals."""

    def cell(value: Any) -> str:
        if isinstance(value, float):
            return "inf" if math.isinf(value) else f"{value:.4f}"
        return str(value)

    cells = [[cell(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths, strict=True))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(r, widths, strict=True)) for r in cells)
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(headers)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def _mean_quality(outputs: Sequence[ImageRGB], references: Sequence[ImageRGB]) -> tuple[float, float]:
    if len(outputs) != len(references):
        raise DimensionError(f"{len(outputs)} outputs for {len(references)} references")
    psnrs = [psnr(o, r) for o, r in zip(outputs, references, strict=True)]
    ssims = [ssim(o, r) for o, r in zip(outputs, references, strict=True)]
    return float(np.mean(psnrs)), float(np.mean(ssims))


@dataclass(frozen=True)
class AblationRow:
    name: str
    psnr: float
    ssim: float


@dataclass
class AblationReport:
    """Three restoration configurations evaluated on the same degraded inputs.

    Rows, in order: decode(r0), decode(A(r0)) without the pilot,
    decode(A(r0, pilot)).
    """

    rows: list[AblationRow]
    n_images: int
    middle_row: str  # "retrained" or "zero_pilot"

    HEADERS: ClassVar[tuple[str, ...]] = ("config", "psnr", "ssim")

    def table_rows(self) -> list[tuple[str, float, float]]:
        return [(r.name, r.psnr, r.ssim) for r in self.rows]

    def format_text(self) -> str:
        return format_table(self.HEADERS, self.table_rows())

    def write(self, out_dir: Path, stem: str = "ablation") -> tuple[Path, Path]:
        csv_path = _write_csv(out_dir / f"{stem}.csv", self.HEADERS, self.table_rows())
        text_path = out_dir / f"{stem}.txt"
        text_path.write_text(self.format_text())
        return csv_path, text_path

    def is_ordered(self, min_gap: float = 0.0) -> bool:
        """PSNR strictly increases down the rows by more than ``min_gap`` dB."""
        values = [r.psnr for r in self.rows]
        return all(b - a > min_gap for a, b in zip(values, values[1:]))

    def require_ordered(self, min_gap: float = 0.0) -> None:
        """
        Raises:
            AcceptanceError: If PSNR does not increase r0 < +A < +pilot
        """
        if not self.is_ordered(min_gap):
            raise AcceptanceError(
                "Ablation PSNR is not ordered r0 < +A < +pilot",
                details={"min_gap": min_gap, **self.to_dict()},
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_images": self.n_images,
            "middle_row": self.middle_row,
            "rows": [{"config": r.name, "psnr": r.psnr, "ssim": r.ssim} for r in self.rows],
        }


def ablation_report(
    bundle: ModelBundle,
    clean: Sequence[ImageRGB],
    degraded: Sequence[ImageRGB],
    *,
    nopilot: ModelBundle | None = None,
) -> AblationReport:
    """Evaluate r0, +A and +pilot restorations against the clean references.

    ``nopilot`` is a bundle whose alignment network was trained with a zero
    pilot; without it the middle row feeds a zero pilot to ``bundle``'s own
    alignment network.
    """
    bundle.eval()
    baseline = decode_baseline(bundle, degraded)
    if nopilot is not None:
        nopilot.eval()
        middle = restore(bundle, degraded, use_pilot=False, alignment=nopilot.alignment)
    else:
        middle = restore(bundle, degraded, use_pilot=False)
    full = restore(bundle, degraded)

    rows = [
        AblationRow(name, *_mean_quality(outputs, clean))
        for name, outputs in zip(ABLATION_ROWS, (baseline, middle, full), strict=True)
    ]
    report = AblationReport(rows=rows, n_images=len(clean), middle_row="retrained" if nopilot is not None else "zero_pilot")
    logger.info(
        "Ablation PSNR " + ", ".join(f"{r.name}={r.psnr:.3f}" for r in rows),
        extra={"stage": 2},
    )
    return report


@dataclass
class MetricsReport:
    """Per-image PSNR/SSIM of the degraded input and the restored output."""

    ids: list[str]
    degraded: list[tuple[float, float]]
    restored: list[tuple[float, float]]
    HEADERS: ClassVar[tuple[str, ...]] = ("id", "psnr_degraded", "ssim_degraded", "psnr_restored", "ssim_restored")

    def table_rows(self) -> list[tuple[Any, ...]]:
        return [(i, *d, *r) for i, d, r in zip(self.ids, self.degraded, self.restored, strict=True)]

    def means(self) -> dict[str, float]:
        d = np.asarray(self.degraded)
        r = np.asarray(self.restored)
        return {
            "psnr_degraded": float(d[:, 0].mean()),
            "ssim_degraded": float(d[:, 1].mean()),
            "psnr_restored": float(r[:, 0].mean()),
            "ssim_restored": float(r[:, 1].mean()),
        }

    def format_text(self) -> str:
        m = self.means()
        summary = ("mean", m["psnr_degraded"], m["ssim_degraded"], m["psnr_restored"], m["ssim_restored"])
        return format_table(self.HEADERS, [*self.table_rows(), summary])

    def write(self, out_dir: Path, stem: str = "metrics") -> tuple[Path, Path]:
        csv_path = _write_csv(out_dir / f"{stem}.csv", self.HEADERS, self.table_rows())
        text_path = out_dir / f"{stem}.txt"
        text_path.write_text(self.format_text())
        return csv_path, text_path


def metrics_report(
    bundle: ModelBundle,
    clean: Sequence[ImageRGB],
    degraded: Sequence[ImageRGB],
    ids: Sequence[str] | None = None,
) -> MetricsReport:
    bundle.eval()
    restored = restore(bundle, degraded)
    names = list(ids) if ids is not None else [f"{i:05d}" for i in range(len(clean))]
    return MetricsReport(
        ids=names,
        degraded=[(psnr(d, c), ssim(d, c)) for d, c in zip(degraded, clean, strict=True)],
        restored=[(psnr(r, c), ssim(r, c)) for r, c in zip(restored, clean, strict=True)],
    )


@dataclass(frozen=True)
class TaskAccuracy:
    direct: float  # task head on the degraded input
    restored: float  # task head on decode(A(r0, pilot))
    n_images: int

    @property
    def gain(self) -> float:
        return self.restored - self.direct

    def require_gain(self) -> None:
        """
        Raises:
            AcceptanceError: If restoring first lowers task accuracy
        """
        if self.restored < self.direct:
            raise AcceptanceError(
                f"Task accuracy drops after restoration ({self.direct:.3f} -> {self.restored:.3f})",
                details=self.to_dict(),
            )

    def format_text(self) -> str:
        return format_table(("input", "accuracy"), [("degraded", self.direct), ("restored", self.restored)])

    def to_dict(self) -> dict[str, Any]:
        return {"direct": self.direct, "restored": self.restored, "gain": self.gain, "n_images": self.n_images}


def _accuracy(logits: torch.Tensor, targets: torch.Tensor) -> float:
    return float((logits.argmax(dim=1) == targets).double().mean())


@torch.no_grad()
def task_accuracy_report(bundle: ModelBundle, degraded: Sequence[ImageRGB], targets: torch.Tensor) -> TaskAccuracy:
    """Task accuracy with and without restoring the degraded images first.

    Targets are class labels (N,) or per-pixel class maps (N, H, W); the
    accuracy is over images or over pixels accordingly.
    """
    bundle.eval()
    direct = bundle.task_head(images_to_tensor(degraded, bundle.dtype))
    refined = bundle.task_head(restored_tensor(bundle, degraded))
    return TaskAccuracy(
        direct=_accuracy(direct, targets),
        restored=_accuracy(refined, targets),
        n_images=len(degraded),
    )
