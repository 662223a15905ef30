"""Unit tests for the guided alignment network."""

import pytest
import torch

from isp_dir.errors import DimensionError, ParameterError
from isp_dir.models.alignment import AlignmentConfig, AlignmentNetwork, align

CONFIG = AlignmentConfig(latent_channels=4, width=4, m1=2, m2=1, m3=2, k=2)


@pytest.fixture
def network() -> AlignmentNetwork:
    torch.manual_seed(0)
    return AlignmentNetwork(CONFIG).double()


def _latents(seed: int, n: int = 3) -> torch.Tensor:
    return torch.randn(n, 4, 4, 4, generator=torch.Generator().manual_seed(seed), dtype=torch.float64)


class TestAlignmentConfig:
    """Tests for AlignmentConfig validation."""

    def test_width_must_be_multiple_of_k(self):
        """Test width % k != 0 is rejected."""
        with pytest.raises(ParameterError, match="multiple"):
            AlignmentConfig(width=6, k=4)

    def test_kernel_size_must_be_odd(self):
        """Test even adaptive kernel sizes are rejected."""
        with pytest.raises(ParameterError, match="odd"):
            AlignmentConfig(kernel_size=4)

    def test_layer_counts_positive(self):
        """Test zero layer counts are rejected."""
        with pytest.raises(ParameterError):
            AlignmentConfig(m1=0)


class TestAlignmentNetwork:
    """Tests for AlignmentNetwork."""

    def test_output_shape(self, network):
        """Test r+ has the shape of r0."""
        r0, pilot = _latents(1), _latents(2)
        assert align(network, r0, pilot).shape == r0.shape

    def test_shape_mismatch(self, network):
        """Test r0 and the pilot must have equal shapes."""
        with pytest.raises(DimensionError):
            network(_latents(1), _latents(2, n=2))

    def test_wrong_channels(self, network):
        """Test the latent channel count is checked."""
        bad = torch.zeros(1, 3, 4, 4, dtype=torch.float64)
        with pytest.raises(DimensionError):
            network(bad, bad)

    def test_kernels_shape(self, network):
        """Test the kernel generator emits k kernels per sample."""
        assert network.kernel_generator(_latents(3)).shape == (3, 2, 3, 3)

    def test_kernel_blocks_are_depthwise(self, network):
        """Test kernel j filters only its block of width / k channels, each channel on its own."""
        with torch.no_grad():
            network.gconv_mix.weight.copy_(torch.eye(4, dtype=torch.float64).view(4, 4, 1, 1))
            network.gconv_mix.bias.zero_()
        features = _latents(14)
        kernels = torch.zeros(3, 2, 3, 3, dtype=torch.float64)
        kernels[:, 0, 1, 1] = 1.0
        with torch.no_grad():
            out = network.adaptive_conv(features, kernels)
        torch.testing.assert_close(out[:, :2], features[:, :2])
        assert int(torch.count_nonzero(out[:, 2:])) == 0

    def test_attention_in_unit_interval(self, network):
        """Test the attention gate is a (N, 1, h, w) map in [0, 1]."""
        features = network.a1(_latents(4))
        gate = network.attention_map(features, _latents(5))
        assert gate.shape == (3, 1, 4, 4)
        assert float(gate.min()) >= 0.0
        assert float(gate.max()) <= 1.0

    def test_pilot_changes_output(self, network):
        """Test the output depends on the pilot."""
        r0 = _latents(6)
        assert not torch.allclose(network(r0, _latents(7)), network(r0, _latents(8)))

    def test_per_sample_kernels(self, network):
        """Test a sample's output depends only on its own pilot."""
        r0 = _latents(9)
        pilot = _latents(10)
        changed = pilot.clone()
        changed[1] = _latents(11)[1]
        base = network(r0, pilot)
        other = network(r0, changed)
        torch.testing.assert_close(base[0], other[0])
        torch.testing.assert_close(base[2], other[2])
        assert not torch.allclose(base[1], other[1])

    def test_attention_override(self, network):
        """Test a supplied attention map replaces the computed one."""
        r0, pilot = _latents(12), _latents(13)
        zeros = torch.zeros(3, 1, 4, 4, dtype=torch.float64)
        ones = torch.ones(3, 1, 4, 4, dtype=torch.float64)
        assert not torch.allclose(network(r0, pilot, attention=zeros), network(r0, pilot, attention=ones))
