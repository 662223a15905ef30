"""Unit tests for latent-space diagnostics."""

import csv
import logging

import numpy as np
import pytest
import torch

from isp_dir.errors import AcceptanceError, SampleSizeError
from isp_dir.evaluation.latents import (
    MIN_INVARIANCE_PAIRS,
    ClusterResult,
    dump_latents,
    invariance_distances,
    latent_grids,
    latent_invariance_ratio,
    mean_latents,
    pca_project,
    pilot_cluster_accuracy,
    write_projection_csv,
)
from isp_dir.isp.base import ImageRGB, get_profile
from isp_dir.models.distributions import load_latent


def _images(n: int, seed: int = 0) -> list[ImageRGB]:
    rng = np.random.default_rng(seed)
    return [ImageRGB(0.05 + 0.9 * rng.random((16, 16, 3))) for _ in range(n)]


CROSS = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


class TestPcaProject:
    """Tests for pca_project()."""

    def test_known_projection(self):
        """Test axis-aligned points project onto their own axes with positive pivots."""
        coords = pca_project(CROSS)
        np.testing.assert_allclose(coords[:, 0], [2.0, -2.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(coords[:, 1], [0.0, 0.0, 1.0, -1.0], atol=1e-12)

    def test_wide_input_matches_tall(self):
        """Test padding with zero features (more features than points) gives the same projection."""
        wide = np.hstack([CROSS, np.zeros((4, 10))])
        np.testing.assert_allclose(pca_project(wide), pca_project(CROSS), atol=1e-9)

    def test_accepts_tensor(self):
        """Test torch tensors are projected like arrays."""
        np.testing.assert_allclose(pca_project(torch.from_numpy(CROSS)), pca_project(CROSS))

    def test_rank_deficient_zeroes_direction(self, caplog):
        """Test collinear points give a zero second coordinate and a warning."""
        line = np.outer(np.arange(5.0), [1.0, 2.0, 3.0])
        with caplog.at_level(logging.WARNING, logger="isp_dir"):
            coords = pca_project(line)
        np.testing.assert_array_equal(coords[:, 1], 0.0)
        assert np.abs(coords[:, 0]).max() > 0
        assert "reduced rank" in caplog.text

    def test_too_few_points(self):
        """Test fewer than dims + 1 points raise SampleSizeError."""
        with pytest.raises(SampleSizeError):
            pca_project(CROSS[:2])


class TestWriteProjectionCsv:
    """Tests for write_projection_csv()."""

    def test_columns_and_rows(self, tmp_path):
        """Test the CSV carries id, x, y, group for every point."""
        path = write_projection_csv(tmp_path / "sub" / "p.csv", ["a", "b", "c", "d"], pca_project(CROSS), list("wxyz"))
        with path.open() as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["id", "x", "y", "group"]
        assert [r[0] for r in rows[1:]] == ["a", "b", "c", "d"]
        assert float(rows[1][1]) == pytest.approx(2.0)
        assert rows[4][3] == "z"

    def test_length_mismatch(self, tmp_path):
        """Test mismatched ids and coordinates raise."""
        with pytest.raises(ValueError):
            write_projection_csv(tmp_path / "p.csv", ["a"], pca_project(CROSS), list("wxyz"))


class TestInvariance:
    """Tests for invariance_distances() and latent_invariance_ratio()."""

    def test_mean_latents_shape(self, mini_bundle):
        """Test one flattened row per image."""
        latents = mean_latents(mini_bundle.dir_encoder, _images(3), batch_size=2)
        assert latents.shape == (3, 16)
        assert latents.dtype == torch.float64

    def test_identical_views_give_zero_ratio(self, mini_bundle):
        """Test pairs of identical views have zero intra-pair distance."""
        images = _images(MIN_INVARIANCE_PAIRS)
        distances = invariance_distances(mini_bundle.dir_encoder, [(img, img) for img in images])
        assert distances.intra == pytest.approx(0.0, abs=1e-12)
        assert distances.inter > 0
        assert latent_invariance_ratio(mini_bundle.dir_encoder, [(img, img) for img in images]) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_too_few_pairs(self, mini_bundle):
        """Test fewer than 50 pairs raise SampleSizeError."""
        images = _images(MIN_INVARIANCE_PAIRS - 1)
        with pytest.raises(SampleSizeError, match="at least 50"):
            invariance_distances(mini_bundle.dir_encoder, [(img, img) for img in images])


class TestPilotClustering:
    """Tests for pilot_cluster_accuracy()."""

    def test_result_layout(self, mini_bundle):
        """Test references come first, then every degraded pilot."""
        result = pilot_cluster_accuracy(mini_bundle.dfr_encoder, _images(2), 3, get_profile("default"), seed=0)
        assert 0.0 <= result.accuracy <= 1.0
        assert result.coords.shape == (8, 2)
        assert result.ids[:2] == ["ref0", "ref1"]
        assert result.ids[2] == "img0_deg0"
        assert result.groups.count("img1") == 4

    def test_deterministic(self, mini_bundle):
        """Test the same seed gives the same clustering."""
        a = pilot_cluster_accuracy(mini_bundle.dfr_encoder, _images(2), 2, get_profile("default"), seed=5)
        b = pilot_cluster_accuracy(mini_bundle.dfr_encoder, _images(2), 2, get_profile("default"), seed=5)
        np.testing.assert_array_equal(a.coords, b.coords)

    def test_needs_two_images(self, mini_bundle):
        """Test a single clean image raises SampleSizeError."""
        with pytest.raises(SampleSizeError):
            pilot_cluster_accuracy(mini_bundle.dfr_encoder, _images(1), 2, get_profile("default"), seed=0)


class TestLatentDumps:
    """Tests for latent_grids() and dump_latents()."""

    def test_grids_flatten_to_mean_latents(self, mini_bundle):
        """Test the grids are the unflattened mean latents."""
        images = _images(3)
        grids = latent_grids(mini_bundle.dir_encoder, images, batch_size=2)
        assert tuple(grids.shape[1:]) == mini_bundle.config.encoder.latent_shape(16, 16)
        torch.testing.assert_close(grids.flatten(1), mean_latents(mini_bundle.dir_encoder, images))

    def test_one_dump_per_image_and_role(self, mini_bundle, tmp_path):
        """Test every image gets an r0 and a pilot dump readable by load_latent."""
        images = _images(2)
        grids = {
            "r0": latent_grids(mini_bundle.dir_encoder, images),
            "pilot": latent_grids(mini_bundle.dfr_encoder, images),
        }
        paths = dump_latents(tmp_path / "dumps", ["00003", "00007"], grids)
        assert [p.name for p in paths] == ["00003_r0.bin", "00003_pilot.bin", "00007_r0.bin", "00007_pilot.bin"]
        latent, header = load_latent(paths[3])
        assert header["role"] == "pilot"
        assert header["source_id"] == "00007"
        assert header["shape"] == list(grids["pilot"].shape[1:])
        torch.testing.assert_close(latent, grids["pilot"][1].float())


class TestClusterAcceptance:
    """Tests for ClusterResult.require_above_chance()."""

    def _result(self, accuracy: float) -> ClusterResult:
        groups = ["img0", "img1", "img2", "img3"]
        return ClusterResult(accuracy=accuracy, coords=np.zeros((4, 2)), ids=groups, groups=groups)

    def test_chance_is_one_over_references(self):
        """Test chance accuracy is one over the number of clean images."""
        assert self._result(0.5).chance == pytest.approx(0.25)

    def test_above_chance_passes(self):
        """Test an accuracy above chance passes."""
        self._result(0.5).require_above_chance()

    def test_at_chance_fails(self):
        """Test an accuracy equal to chance raises acceptance_failed."""
        with pytest.raises(AcceptanceError) as exc_info:
            self._result(0.25).require_above_chance()
        assert exc_info.value.error_code == "acceptance_failed"
        assert exc_info.value.details["chance"] == pytest.approx(0.25)
