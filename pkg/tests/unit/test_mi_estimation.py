"""Unit tests for the variational mutual-information bounds."""

import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from isp_dir.errors import BatchError, DimensionError
from isp_dir.models.distributions import DiagonalGaussian
from isp_dir.models.mi_estimation import (
    CriticBatch,
    cmi_upper_bound,
    d_akl,
    derangement,
    jsd_mi_lower_bound,
    shuffle_pairing,
    softplus,
)

scores = st.lists(st.floats(min_value=-50.0, max_value=50.0, allow_nan=False), min_size=2, max_size=16)


class TestCriticBatch:
    """Tests for CriticBatch validation."""

    def test_single_pair_rejected(self):
        """Test N < 2 raises BatchError."""
        with pytest.raises(BatchError):
            CriticBatch(torch.zeros(1), torch.zeros(1))

    def test_non_finite_rejected(self):
        """Test infinite scores raise BatchError."""
        with pytest.raises(BatchError, match="finite"):
            CriticBatch(torch.tensor([0.0, math.inf]), torch.zeros(2))

    def test_two_dimensional_rejected(self):
        """Test scores must be 1-D."""
        with pytest.raises(DimensionError):
            CriticBatch(torch.zeros(2, 2), torch.zeros(2, 2))


class TestJsdBound:
    """Tests for softplus() and jsd_mi_lower_bound()."""

    def test_zero_critic(self):
        """Test an all-zero critic gives exactly -2 ln 2."""
        value = jsd_mi_lower_bound(CriticBatch(torch.zeros(8, dtype=torch.float64), torch.zeros(8, dtype=torch.float64)))
        assert value.item() == pytest.approx(-2.0 * math.log(2.0), abs=1e-12)

    def test_separating_critic_approaches_zero(self):
        """Test a confidently separating critic approaches 0 from below."""
        batch = CriticBatch(torch.full((4,), 30.0, dtype=torch.float64), torch.full((4,), -30.0, dtype=torch.float64))
        value = jsd_mi_lower_bound(batch).item()
        assert -1e-10 < value < 0.0

    @given(scores, scores)
    @settings(max_examples=50, deadline=None)
    def test_bound_is_non_positive(self, joint, marginal):
        """Test the bound never exceeds zero."""
        batch = CriticBatch(torch.tensor(joint, dtype=torch.float64), torch.tensor(marginal, dtype=torch.float64))
        assert jsd_mi_lower_bound(batch).item() <= 0.0

    def test_softplus_tails(self):
        """Test softplus is finite and accurate at both tails."""
        out = softplus(torch.tensor([-1000.0, 0.0, 1000.0], dtype=torch.float64))
        assert out[0].item() == pytest.approx(0.0, abs=1e-300)
        assert out[1].item() == pytest.approx(math.log(2.0))
        assert out[2].item() == pytest.approx(1000.0)

    def test_softplus_gradient_at_zero(self):
        """Test the softplus gradient at 0 is one half."""
        t = torch.zeros(1, dtype=torch.float64, requires_grad=True)
        softplus(t).sum().backward()
        assert t.grad is not None
        assert t.grad.item() == pytest.approx(0.5, abs=1e-15)


class TestDerangement:
    """Tests for derangement() and shuffle_pairing()."""

    @pytest.mark.parametrize("n", [2, 3, 5, 16])
    def test_no_fixed_points(self, n: int):
        """Test no index maps to itself."""
        g = torch.Generator().manual_seed(n)
        for _ in range(20):
            perm = derangement(n, g)
            assert sorted(perm.tolist()) == list(range(n))
            assert not bool((perm == torch.arange(n)).any())

    def test_two_items_swap(self):
        """Test the only derangement of two items is a swap."""
        assert derangement(2).tolist() == [1, 0]

    @pytest.mark.parametrize("n", [0, 1])
    def test_too_small(self, n: int):
        """Test fewer than two items raise BatchError."""
        with pytest.raises(BatchError):
            derangement(n)

    def test_shuffle_tensor(self):
        """Test a shuffled tensor moves every row."""
        latents = torch.arange(6.0).reshape(6, 1)
        shuffled = shuffle_pairing(latents, torch.Generator().manual_seed(0))
        assert isinstance(shuffled, torch.Tensor)
        assert not bool((shuffled == latents).any())

    def test_shuffle_sequence(self):
        """Test a shuffled list moves every item."""
        items = ["a", "b", "c"]
        shuffled = shuffle_pairing(items, torch.Generator().manual_seed(1))
        assert sorted(shuffled) == items
        assert all(x != y for x, y in zip(shuffled, items, strict=True))

    def test_single_item_batch(self):
        """Test a batch of one cannot be shuffled."""
        with pytest.raises(BatchError):
            shuffle_pairing(torch.zeros(1, 3))


class TestUpperBounds:
    """Tests for cmi_upper_bound() and d_akl()."""

    def test_equal_posteriors(self):
        """Test the bounds vanish when the posteriors coincide."""
        g = DiagonalGaussian(torch.randn(2, 3, 4, 4, dtype=torch.float64), torch.zeros(2, 3, 4, 4, dtype=torch.float64))
        assert cmi_upper_bound(g, g).item() == pytest.approx(0.0, abs=1e-12)
        assert d_akl(g, g, g).item() == pytest.approx(0.0, abs=1e-12)

    def test_d_akl_is_average(self):
        """Test d_akl() averages the two single-view KLs."""
        gen = torch.Generator().manual_seed(0)
        joint, c1, c2 = (
            DiagonalGaussian(torch.randn(8, generator=gen, dtype=torch.float64), torch.randn(8, generator=gen, dtype=torch.float64))
            for _ in range(3)
        )
        expected = 0.5 * (cmi_upper_bound(joint, c1) + cmi_upper_bound(joint, c2))
        assert d_akl(joint, c1, c2).item() == pytest.approx(expected.item())
