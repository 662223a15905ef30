"""Pytest configuration and shared fixtures."""

import json
import logging
import os
from collections.abc import Iterator
from pathlib import Path
from typing import Any

import numpy as np
import pytest
import torch

from isp_dir.cli import main
from isp_dir.config import reset_config
from isp_dir.data.corpus import gen_toy_corpus, write_corpus
from isp_dir.isp.base import ImageRGB
from isp_dir.models.bundle import ModelBundle, miniature_config


@pytest.fixture(autouse=True)
def reset_config_fixture() -> Iterator[None]:
    """Reset config singleton between tests for isolation."""
    reset_config()
    yield
    reset_config()


@pytest.fixture
def set_env_vars():
    """Fixture to temporarily set environment variables."""

    def _set_env_vars(**kwargs: str) -> None:
        for key, value in kwargs.items():
            os.environ[key] = value

    yield _set_env_vars

    # Cleanup: remove all ISP_DIR_ env vars
    keys_to_remove = [key for key in os.environ if key.startswith("ISP_DIR_")]
    for key in keys_to_remove:
        del os.environ[key]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng: np.random.Generator) -> ImageRGB:
    """A 32×32 image of uniform noise in [0.05, 0.95]."""
    return ImageRGB(0.05 + 0.9 * rng.random((32, 32, 3)))


@pytest.fixture
def smooth_image() -> ImageRGB:
    """A 32×32 image of smooth colour ramps."""
    y, x = np.mgrid[0:32, 0:32] / 31.0
    pixels = np.stack([0.2 + 0.6 * x, 0.3 + 0.4 * y, 0.5 + 0.3 * x * y], axis=-1)
    return ImageRGB(pixels)


@pytest.fixture
def mini_bundle() -> ModelBundle:
    """Float64 miniature bundle for 16×16 images."""
    return ModelBundle.build(miniature_config(), seed=0, dtype=torch.float64)


@pytest.fixture
def mini_images() -> torch.Tensor:
    """Four float64 16×16 RGB images in (0, 1)."""
    g = torch.Generator().manual_seed(7)
    return 0.05 + 0.9 * torch.rand((4, 3, 16, 16), generator=g, dtype=torch.float64)


@pytest.fixture
def toy_corpus_dir(tmp_path: Path) -> Path:
    """A 12-sample, 3-class, 16×16 toy corpus written to disk."""
    out = tmp_path / "corpus"
    write_corpus(gen_toy_corpus(12, 3, np.random.default_rng(0), size=16), out)
    return out


@pytest.fixture
def restore_logging() -> Iterator[None]:
    """Restore root and package logger handlers after a test that runs the CLI."""
    root = logging.getLogger()
    package_logger = logging.getLogger("isp_dir")
    saved = (root.handlers[:], root.level, package_logger.handlers[:], package_logger.level)
    yield
    root.handlers, package_logger.handlers = saved[0], saved[2]
    root.setLevel(saved[1])
    package_logger.setLevel(saved[3])


@pytest.fixture
def run_cli(capsys: pytest.CaptureFixture[str], restore_logging: None):
    """Run the CLI in-process; returns (exit code, stdout JSON or None, failure JSON or None)."""

    def _run(*argv: str) -> tuple[int, dict[str, Any] | None, dict[str, Any] | None]:
        code = main(list(argv))
        captured = capsys.readouterr()
        out_lines = captured.out.strip().splitlines()
        err_lines = captured.err.strip().splitlines()
        stdout = json.loads(out_lines[-1]) if out_lines else None
        stderr = json.loads(err_lines[-1]) if code != 0 and err_lines else None
        return code, stdout, stderr

    return _run
