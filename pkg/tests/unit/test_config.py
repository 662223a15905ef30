"""Unit tests for runtime configuration management."""

import os
from pathlib import Path

import pytest

from isp_dir.config import Config, get_config, load_config, reset_config


class TestLoadConfig:
    """Tests for load_config() function."""

    def test_load_config_with_defaults(self):
        """Test load_config() returns defaults when no env vars set."""
        config = load_config()
        assert config.log_level == "INFO"
        assert config.log_mode == "stderr"
        assert config.log_file is None
        assert config.workers == 4
        assert config.torch_threads == 1

    def test_load_config_with_custom_log_level(self, set_env_vars):
        """Test load_config() with custom log level."""
        set_env_vars(ISP_DIR_LOG_LEVEL="DEBUG")
        config = load_config()
        assert config.log_level == "DEBUG"

    def test_load_config_log_level_case_insensitive(self, set_env_vars):
        """Test load_config() handles log level case-insensitively."""
        set_env_vars(ISP_DIR_LOG_LEVEL="warning")
        assert load_config().log_level == "WARNING"

    def test_load_config_with_custom_log_mode(self, set_env_vars):
        """Test load_config() with custom log mode."""
        set_env_vars(ISP_DIR_LOG_MODE="both")
        assert load_config().log_mode == "both"

    def test_load_config_with_log_file(self, set_env_vars, tmp_path: Path):
        """Test load_config() resolves the log file path."""
        log_file = tmp_path / "train.log"
        set_env_vars(ISP_DIR_LOG_FILE=str(log_file))
        assert load_config().log_file == log_file.resolve()

    def test_load_config_with_workers_and_threads(self, set_env_vars):
        """Test load_config() parses worker and thread counts."""
        set_env_vars(ISP_DIR_WORKERS="8", ISP_DIR_TORCH_THREADS="2")
        config = load_config()
        assert config.workers == 8
        assert config.torch_threads == 2

    def test_load_config_invalid_log_level_raises_error(self, set_env_vars):
        """Test load_config() raises ValueError for invalid log level."""
        set_env_vars(ISP_DIR_LOG_LEVEL="LOUD")
        with pytest.raises(ValueError, match="must be one of"):
            load_config()

    def test_load_config_invalid_log_mode_raises_error(self, set_env_vars):
        """Test load_config() raises ValueError for invalid log mode."""
        set_env_vars(ISP_DIR_LOG_MODE="syslog")
        with pytest.raises(ValueError, match="must be one of"):
            load_config()

    def test_load_config_non_integer_workers_raises_error(self, set_env_vars):
        """Test load_config() raises ValueError for non-integer workers."""
        set_env_vars(ISP_DIR_WORKERS="many")
        with pytest.raises(ValueError, match="must be an integer"):
            load_config()

    @pytest.mark.parametrize("value", ["0", "-3"])
    def test_load_config_non_positive_threads_raises_error(self, set_env_vars, value):
        """Test load_config() rejects zero or negative thread counts."""
        set_env_vars(ISP_DIR_TORCH_THREADS=value)
        with pytest.raises(ValueError, match="must be positive"):
            load_config()


class TestGetConfig:
    """Tests for get_config() singleton function."""

    def test_get_config_returns_config_instance(self):
        """Test get_config() returns Config instance."""
        assert isinstance(get_config(), Config)

    def test_get_config_is_singleton(self):
        """Test get_config() returns same instance on multiple calls."""
        assert get_config() is get_config()

    def test_get_config_after_reset(self):
        """Test get_config() creates new instance after reset."""
        config1 = get_config()
        reset_config()
        assert get_config() is not config1


class TestResetConfig:
    """Tests for reset_config() function."""

    def test_reset_config_for_test_isolation(self, set_env_vars):
        """Test reset_config() lets a changed environment take effect."""
        set_env_vars(ISP_DIR_WORKERS="2")
        assert get_config().workers == 2

        reset_config()
        del os.environ["ISP_DIR_WORKERS"]

        assert get_config().workers == 4

    def test_reset_config_idempotent(self):
        """Test reset_config() can be called multiple times safely."""
        get_config()
        reset_config()
        reset_config()
        assert isinstance(get_config(), Config)
