"""Per-stage training metrics: running averages and the metrics CSV.

Every optimizer step appends one row per loss to ``metrics.csv`` with the
columns ``epoch, step, loss, loss_total, <each loss part>, lr, wall_ms``.
Parts a loss does not have are left empty.
"""

import csv
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from types import TracebackType
from typing import Any, TextIO


@dataclass
class StageMetrics:
    """Running sums of every loss value seen in the current epoch.

    Keys are ``<loss>.<part>`` and ``<loss>.total``.
    """

    stage: int
    steps: int = 0
    sums: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def record(self, loss_name: str, total: float, parts: Mapping[str, float]) -> None:
        for key, value in ((f"{loss_name}.total", total), *((f"{loss_name}.{k}", v) for k, v in parts.items())):
            self.sums[key] = self.sums.get(key, 0.0) + value
            self.counts[key] = self.counts.get(key, 0) + 1

    def step(self) -> None:
        self.steps += 1

    def averages(self) -> dict[str, float]:
        """Mean of each recorded value over the epoch."""
        return {key: self.sums[key] / self.counts[key] for key in sorted(self.sums)}

    def reset(self) -> None:
        self.steps = 0
        self.sums.clear()
        self.counts.clear()

    def to_dict(self) -> dict[str, Any]:
        """Convert metrics to dictionary format.

        Returns:
            Dictionary representation suitable for JSON serialization
        """
        return {"stage": self.stage, "steps": self.steps, "averages": self.averages()}


def metric_columns(parts: Sequence[str]) -> list[str]:
    return ["epoch", "step", "loss", "loss_total", *parts, "lr", "wall_ms"]


class MetricsRecorder:
    """Appends loss rows to a stage's metrics CSV.

    With ``log_wall_time=False`` the ``wall_ms`` column is always 0, so two
    runs with the same seed write byte-identical files. When resuming from
    epoch ``resume_epoch``, rows of that epoch and later are dropped first so
    a run interrupted mid-epoch does not leave duplicates.
    """

    def __init__(
        self,
        path: Path,
        parts: Sequence[str],
        *,
        log_wall_time: bool = True,
        resume_epoch: int | None = None,
    ) -> None:
        self.path = path
        self.columns = metric_columns(parts)
        self.log_wall_time = log_wall_time
        self._last = time.perf_counter()
        path.parent.mkdir(parents=True, exist_ok=True)

        kept: list[dict[str, str]] = []
        if resume_epoch is not None and path.exists():
            with path.open(newline="") as f:
                kept = [row for row in csv.DictReader(f) if int(row["epoch"]) < resume_epoch]

        self._file: TextIO = path.open("w", newline="")
        self._writer = csv.DictWriter(self._file, fieldnames=self.columns, restval="")
        self._writer.writeheader()
        self._writer.writerows(kept)
        self._file.flush()

    def record(
        self,
        *,
        epoch: int,
        step: int,
        loss: str,
        total: float,
        parts: Mapping[str, float],
        lr: float,
    ) -> None:
        now = time.perf_counter()
        wall_ms = round((now - self._last) * 1000.0, 3) if self.log_wall_time else 0
        self._last = now
        row: dict[str, Any] = {
            "epoch": epoch,
            "step": step,
            "loss": loss,
            "loss_total": repr(total),
            "lr": repr(lr),
            "wall_ms": wall_ms,
        }
        row.update({name: repr(value) for name, value in parts.items()})
        self._writer.writerow(row)

    def flush(self) -> None:
        self._file.flush()

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> "MetricsRecorder":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


def read_metrics(path: Path) -> list[dict[str, str]]:
    """Load a metrics CSV as a list of row dicts."""
    with path.open(newline="") as f:
        return list(csv.DictReader(f))
