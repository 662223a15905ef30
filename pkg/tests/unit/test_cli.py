"""Unit tests for the command-line surface."""

import pytest

from isp_dir.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser
from isp_dir.errors import UsageError


class TestParser:
    """Tests for build_parser()."""

    def test_global_flags_after_subcommand(self):
        """Test global flags are accepted after the subcommand."""
        args = build_parser().parse_args(["train", "--stage", "1", "--seed", "3", "--set", "a.b=1"])
        assert args.seed == 3
        assert args.overrides == ["a.b=1"]

    def test_global_flags_before_subcommand(self):
        """Test global flags are accepted before the subcommand."""
        args = build_parser().parse_args(["--seed", "4", "synth-data", "--out", "x"])
        assert args.seed == 4
        assert args.n == 200
        assert args.classes == 4

    def test_defaults_without_global_flags(self):
        """Test unset global flags keep their defaults."""
        args = build_parser().parse_args(["eval", "--ckpt", "c.pt"])
        assert args.seed is None
        assert args.overrides == []
        assert args.report == "metrics"

    def test_errors_raise(self):
        """Test parse errors raise UsageError instead of exiting."""
        with pytest.raises(UsageError):
            build_parser().parse_args(["train", "--stage", "3"])


class TestMain:
    """Tests for main() exit codes and JSON output."""

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["fly"],
            ["train"],
            ["synth-data"],
            ["eval", "--ckpt", "c.pt", "--log-level", "LOUD"],
        ],
    )
    def test_usage_errors(self, run_cli, argv):
        """Test malformed invocations exit 2 with a usage_error line on stderr."""
        code, stdout, stderr = run_cli(*argv)
        assert code == EXIT_USAGE
        assert stdout is None
        assert stderr["error_code"] == "usage_error"

    def test_synth_data_success(self, run_cli, tmp_path):
        """Test synth-data prints a success dict and exits 0."""
        out = tmp_path / "corpus"
        code, stdout, _ = run_cli("synth-data", "--out", str(out), "--n", "4", "--classes", "2", "--size", "16", "--seed", "1")
        assert code == EXIT_OK
        assert stdout["status"] == "success"
        assert stdout["n"] == 4
        assert stdout["seed"] == 1
        assert (out / "manifest.json").is_file()

    def test_command_validation_is_usage_error(self, run_cli, tmp_path):
        """Test an out-of-range argument rejected by the command exits 2."""
        code, _, stderr = run_cli("synth-data", "--out", str(tmp_path / "c"), "--classes", "11")
        assert code == EXIT_USAGE
        assert "classes" in stderr["message"]

    def test_malformed_override(self, run_cli):
        """Test a --set without '=' exits 2."""
        code, _, stderr = run_cli("train", "--stage", "1", "--set", "stage1.max_epochs")
        assert code == EXIT_USAGE
        assert stderr["error_code"] == "usage_error"

    def test_missing_checkpoint(self, run_cli, tmp_path):
        """Test eval on a missing checkpoint exits 1 with input_error."""
        code, _, stderr = run_cli("eval", "--ckpt", str(tmp_path / "none.pt"))
        assert code == EXIT_FAILURE
        assert stderr["error_code"] == "input_error"

    def test_bad_environment(self, run_cli, set_env_vars, tmp_path):
        """Test an invalid environment variable exits 1 with config_error."""
        set_env_vars(ISP_DIR_WORKERS="many")
        code, _, stderr = run_cli("synth-data", "--out", str(tmp_path / "c"))
        assert code == EXIT_FAILURE
        assert stderr["error_code"] == "config_error"
        assert "ISP_DIR_WORKERS" in stderr["message"]
