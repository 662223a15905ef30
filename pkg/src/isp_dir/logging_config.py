"""Structured logging for isp-dir runs.

Commands log JSON lines to stderr. Long training runs can add a rotating,
human-readable log file. Nothing is configured at import time; the CLI calls
setup_logging() once per invocation and sets ``run_id_var``.

Training code logs through a StageLoggerAdapter so every line of a stage
carries its ``stage`` (and, inside the epoch loop, ``epoch``) field.
"""

import json
import logging
import sys
from collections.abc import MutableMapping
from contextvars import ContextVar
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .config import Config

    _AdapterBase = logging.LoggerAdapter[logging.Logger]
else:
    _AdapterBase = logging.LoggerAdapter

# One id per CLI invocation
run_id_var: ContextVar[str | None] = ContextVar("run_id", default=None)

# Structured fields copied from `extra=` into the JSON line
EXTRA_FIELDS = ("stage", "epoch", "step", "path", "duration", "error_code", "part")
# Fields that locate a line inside a training run
PROGRESS_FIELDS = ("stage", "epoch", "step")

LOG_FILE_MAX_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 5
LOG_DIR = Path.home() / ".isp-dir" / "logs"


def _fields(record: logging.LogRecord, keys: tuple[str, ...]) -> dict[str, Any]:
    return {key: getattr(record, key) for key in keys if hasattr(record, key)}


class JsonFormatter(logging.Formatter):
    """One JSON object per record, with the run id and any training fields."""

    def format(self, record: logging.LogRecord) -> str:
        log_obj: dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if run_id := run_id_var.get():
            log_obj["run_id"] = run_id
        log_obj.update(_fields(record, EXTRA_FIELDS))
        if record.exc_info:
            log_obj["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_obj)


class ProgressFormatter(logging.Formatter):
    """Plain-text lines tagged ``[stage 1 epoch 3]`` when the record has progress fields."""

    def __init__(self) -> None:
        super().__init__(
            "%(asctime)s.%(msecs)03d [%(levelname)s] %(name)s%(progress)s: %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

    def format(self, record: logging.LogRecord) -> str:
        progress = _fields(record, PROGRESS_FIELDS)
        record.progress = (  # type: ignore[attr-defined]
            " [" + " ".join(f"{k} {v}" for k, v in progress.items()) + "]" if progress else ""
        )
        return super().format(record)


class RunIdFilter(logging.Filter):
    """Copy the current run id onto each record."""

    def filter(self, record: logging.LogRecord) -> bool:
        if run_id := run_id_var.get():
            record.run_id = run_id  # type: ignore[attr-defined]
        return True


class StageLoggerAdapter(_AdapterBase):
    """Logger bound to a training stage and optionally an epoch.

    Fields from the adapter are merged under the per-call ``extra``; a key
    given in the call wins.
    """

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> tuple[Any, MutableMapping[str, Any]]:
        kwargs["extra"] = {**(self.extra or {}), **kwargs.get("extra", {})}
        return msg, kwargs

    def at_epoch(self, epoch: int) -> "StageLoggerAdapter":
        """Same logger and stage, stamped with ``epoch``."""
        return StageLoggerAdapter(self.logger, {**(self.extra or {}), "epoch": epoch})


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger under the isp_dir namespace.

    Example:
        >>> get_logger("isp.pipeline").name
        'isp_dir.isp.pipeline'
    """
    return logging.getLogger(f"isp_dir.{name}")


def stage_logger(name: str, stage: int, *, epoch: int | None = None) -> StageLoggerAdapter:
    """``get_logger(name)`` wrapped so each record carries ``stage`` (and ``epoch``)."""
    extra: dict[str, object] = {"stage": stage}
    if epoch is not None:
        extra["epoch"] = epoch
    return StageLoggerAdapter(get_logger(name), extra)


def _log_file(config: "Config") -> Path:
    if config.log_file:
        return config.log_file
    timestamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return LOG_DIR / f"isp-dir-{timestamp}.log"


def setup_logging(config: "Config") -> None:
    """
    Replace the root handlers according to ``config.log_mode``.

    - "stderr": JSON lines on stderr
    - "file": progress-tagged text in ``config.log_file`` (rotating)
    - "both": both handlers
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(config.log_level)
    root_logger.handlers.clear()

    handlers: list[logging.Handler] = []
    if config.log_mode in ("stderr", "both"):
        stderr_handler = logging.StreamHandler(sys.stderr)
        stderr_handler.setFormatter(JsonFormatter())
        handlers.append(stderr_handler)
    if config.log_mode in ("file", "both"):
        log_file = _log_file(config)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(log_file, maxBytes=LOG_FILE_MAX_BYTES, backupCount=LOG_FILE_BACKUPS)
        file_handler.setFormatter(ProgressFormatter())
        handlers.append(file_handler)

    run_id_filter = RunIdFilter()
    for handler in handlers:
        handler.addFilter(run_id_filter)
        root_logger.addHandler(handler)

    logging.getLogger("isp_dir").setLevel(config.log_level)
    get_logger("logging").debug(f"Logging initialized: mode={config.log_mode}, level={config.log_level}")
