"""Unit tests for logging configuration.

These tests verify JSON and file formatting, run ID handling, stage-bound
loggers, and logging setup.
"""

import json
import logging
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path

import pytest

from isp_dir.config import Config
from isp_dir.logging_config import (
    JsonFormatter,
    ProgressFormatter,
    RunIdFilter,
    StageLoggerAdapter,
    get_logger,
    run_id_var,
    setup_logging,
    stage_logger,
)


@pytest.fixture(autouse=True)
def clean_logger_state():
    """Ensure clean logger state before and after each test."""
    root = logging.getLogger()
    package_logger = logging.getLogger("isp_dir")

    original_root_handlers = root.handlers[:]
    original_root_level = root.level
    original_package_handlers = package_logger.handlers[:]
    original_package_level = package_logger.level

    yield

    root.handlers = original_root_handlers
    root.setLevel(original_root_level)
    package_logger.handlers = original_package_handlers
    package_logger.setLevel(original_package_level)


def _record(msg: str = "Test message", exc_info=None) -> logging.LogRecord:
    return logging.LogRecord(
        name="test.logger",
        level=logging.INFO,
        pathname="test.py",
        lineno=42,
        msg=msg,
        args=(),
        exc_info=exc_info,
    )


def _config(**overrides) -> Config:
    values = {
        "log_level": "INFO",
        "log_mode": "stderr",
        "log_file": None,
        "workers": 4,
        "torch_threads": 1,
    }
    values.update(overrides)
    return Config(**values)


class TestJsonFormatter:
    """Tests for JsonFormatter class."""

    def test_json_formatter_basic(self):
        """Test JsonFormatter outputs valid JSON with basic fields only."""
        token = run_id_var.set(None)
        try:
            log_obj = json.loads(JsonFormatter().format(_record()))
        finally:
            run_id_var.reset(token)

        assert log_obj["level"] == "INFO"
        assert log_obj["logger"] == "test.logger"
        assert log_obj["message"] == "Test message"
        datetime.fromisoformat(log_obj["timestamp"])
        assert set(log_obj) == {"timestamp", "level", "logger", "message"}

    def test_json_formatter_with_run_id(self):
        """Test JsonFormatter includes run_id when set in context."""
        token = run_id_var.set("run-123")
        try:
            log_obj = json.loads(JsonFormatter().format(_record()))
        finally:
            run_id_var.reset(token)
        assert log_obj["run_id"] == "run-123"

    def test_json_formatter_with_training_extras(self):
        """Test JsonFormatter copies the structured training fields."""
        record = _record()
        record.stage = 1
        record.epoch = 3
        record.step = 17
        record.duration = 1.5
        record.part = "d_akl"
        record.unrelated = "dropped"

        log_obj = json.loads(JsonFormatter().format(record))

        assert log_obj["stage"] == 1
        assert log_obj["epoch"] == 3
        assert log_obj["step"] == 17
        assert log_obj["duration"] == 1.5
        assert log_obj["part"] == "d_akl"
        assert "unrelated" not in log_obj

    def test_json_formatter_with_exception(self):
        """Test JsonFormatter formats exception info."""
        try:
            raise ValueError("Test error")
        except ValueError:
            exc_info = sys.exc_info()

        log_obj = json.loads(JsonFormatter().format(_record(exc_info=exc_info)))

        assert "ValueError: Test error" in log_obj["exception"]
        assert "Traceback" in log_obj["exception"]

    def test_json_formatter_with_non_ascii(self):
        """Test JsonFormatter handles non-ASCII characters in messages."""
        log_obj = json.loads(JsonFormatter().format(_record("latent 4×8×8 σ=0.1")))
        assert log_obj["message"] == "latent 4×8×8 σ=0.1"


class TestProgressFormatter:
    """Tests for ProgressFormatter class."""

    def test_tags_stage_and_epoch(self):
        """Test records with training fields get a [stage N epoch M] tag."""
        record = _record("epoch done")
        record.stage = 1
        record.epoch = 3
        line = ProgressFormatter().format(record)
        assert line.endswith("[INFO] test.logger [stage 1 epoch 3]: epoch done")

    def test_plain_record_untagged(self):
        """Test records without training fields have no tag."""
        line = ProgressFormatter().format(_record())
        assert line.endswith("[INFO] test.logger: Test message")


class TestRunIdFilter:
    """Tests for RunIdFilter class."""

    def test_run_id_filter(self):
        """Test RunIdFilter injects run_id into log records."""
        record = _record()
        token = run_id_var.set("run-456")
        try:
            assert RunIdFilter().filter(record) is True
            assert record.run_id == "run-456"  # type: ignore[attr-defined]
        finally:
            run_id_var.reset(token)

    def test_run_id_filter_without_context(self):
        """Test RunIdFilter passes through when no run_id in context."""
        record = _record()
        token = run_id_var.set(None)
        try:
            assert RunIdFilter().filter(record) is True
            assert not hasattr(record, "run_id")
        finally:
            run_id_var.reset(token)


class TestGetLogger:
    """Tests for get_logger() function."""

    def test_get_logger_namespace(self):
        """Test get_logger() returns logger under the isp_dir namespace."""
        assert get_logger("training.trainer").name == "isp_dir.training.trainer"

    def test_get_logger_different_names(self):
        """Test get_logger() returns different loggers for different names."""
        assert get_logger("isp.pipeline") is not get_logger("isp.noise")


class TestStageLogger:
    """Tests for stage_logger() and StageLoggerAdapter."""

    def test_records_carry_stage(self, caplog):
        """Test every record from a stage logger has the stage field."""
        log = stage_logger("training.trainer", 2)
        with caplog.at_level(logging.INFO, logger="isp_dir"):
            log.info("started")
        record = caplog.records[-1]
        assert record.name == "isp_dir.training.trainer"
        assert record.stage == 2  # type: ignore[attr-defined]
        assert not hasattr(record, "epoch")

    def test_at_epoch_adds_epoch(self, caplog):
        """Test at_epoch() stamps the epoch and keeps per-call fields."""
        log = stage_logger("training.trainer", 1)
        with caplog.at_level(logging.INFO, logger="isp_dir"):
            log.at_epoch(4).info("epoch done", extra={"duration": 0.5})
            log.info("after")
        done, after = caplog.records[-2:]
        assert (done.stage, done.epoch, done.duration) == (1, 4, 0.5)  # type: ignore[attr-defined]
        assert not hasattr(after, "epoch")

    def test_call_extra_wins(self, caplog):
        """Test a field passed in the call overrides the bound one."""
        log = stage_logger("training.trainer", 1, epoch=0)
        assert isinstance(log, StageLoggerAdapter)
        with caplog.at_level(logging.INFO, logger="isp_dir"):
            log.info("resumed", extra={"epoch": 7})
        assert caplog.records[-1].epoch == 7  # type: ignore[attr-defined]

    def test_json_line_has_stage_fields(self, caplog):
        """Test the JSON formatter emits the fields a stage logger adds."""
        with caplog.at_level(logging.INFO, logger="isp_dir"):
            stage_logger("training.trainer", 2, epoch=1).info("epoch done")
        log_obj = json.loads(JsonFormatter().format(caplog.records[-1]))
        assert (log_obj["stage"], log_obj["epoch"]) == (2, 1)


class TestSetupLogging:
    """Tests for setup_logging() function."""

    def test_setup_logging_stderr_mode(self):
        """Test setup_logging() adds one JSON stderr handler in stderr mode."""
        root_logger = logging.getLogger()
        root_logger.handlers.clear()

        setup_logging(_config())

        assert len(root_logger.handlers) == 1
        handler = root_logger.handlers[0]
        assert isinstance(handler, logging.StreamHandler)
        assert handler.stream == sys.stderr
        assert isinstance(handler.formatter, JsonFormatter)

    def test_setup_logging_file_mode(self, tmp_path: Path):
        """Test setup_logging() adds a rotating file handler in file mode."""
        root_logger = logging.getLogger()
        root_logger.handlers.clear()

        setup_logging(_config(log_level="DEBUG", log_mode="file", log_file=tmp_path / "run.log"))

        assert len(root_logger.handlers) == 1
        assert isinstance(root_logger.handlers[0], RotatingFileHandler)
        assert logging.getLogger("isp_dir").level == logging.DEBUG

    def test_setup_logging_both_mode(self, tmp_path: Path):
        """Test setup_logging() adds both handlers in both mode."""
        root_logger = logging.getLogger()
        root_logger.handlers.clear()

        setup_logging(_config(log_mode="both", log_file=tmp_path / "run.log"))

        assert len(root_logger.handlers) == 2

    def test_setup_logging_twice_does_not_duplicate(self):
        """Test calling setup_logging() twice keeps a single handler."""
        root_logger = logging.getLogger()
        setup_logging(_config())
        setup_logging(_config())
        assert len(root_logger.handlers) == 1

    def test_file_lines_are_progress_tagged(self, tmp_path: Path):
        """Test file mode writes plain lines tagged with stage and epoch."""
        root_logger = logging.getLogger()
        root_logger.handlers.clear()
        log_file = tmp_path / "run.log"

        setup_logging(_config(log_mode="file", log_file=log_file))
        stage_logger("training.trainer", 1, epoch=2).info("epoch done")
        for handler in root_logger.handlers:
            handler.flush()

        assert "isp_dir.training.trainer [stage 1 epoch 2]: epoch done" in log_file.read_text()
