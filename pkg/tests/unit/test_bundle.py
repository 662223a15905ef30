"""Unit tests for the model bundle, freezing and checkpoints."""

import pytest
import torch

from isp_dir.errors import FrozenViolationError, InputError, UnknownNetworkError
from isp_dir.models.bundle import (
    NETWORK_NAMES,
    STAGE1_FROZEN,
    Checkpoint,
    ModelBundle,
    load_checkpoint,
    miniature_config,
    save_checkpoint,
)


class TestModelBundle:
    """Tests for ModelBundle construction and lookup."""

    def test_all_networks_present(self, mini_bundle):
        """Test every named network is built."""
        assert [name for name, _ in mini_bundle] == list(NETWORK_NAMES)
        assert mini_bundle.dtype == torch.float64

    def test_unknown_network(self, mini_bundle):
        """Test an unknown name raises a KeyError-compatible error."""
        with pytest.raises(UnknownNetworkError) as exc_info:
            mini_bundle["generator"]
        assert isinstance(exc_info.value, KeyError)
        assert exc_info.value.error_code == "key_error"

    def test_build_is_seeded(self):
        """Test equal seeds build identical weights and different seeds differ."""
        a = ModelBundle.build(miniature_config(), seed=3)
        b = ModelBundle.build(miniature_config(), seed=3)
        c = ModelBundle.build(miniature_config(), seed=4)
        assert a.checksums() == b.checksums()
        assert a.checksum("dir_encoder") != c.checksum("dir_encoder")

    def test_encoders_initialized_independently(self, mini_bundle):
        """Test the two encoders do not share initial weights."""
        assert mini_bundle.checksum("dir_encoder") != mini_bundle.checksum("dfr_encoder")


class TestFreezing:
    """Tests for freeze() and verify_frozen()."""

    def test_freeze_disables_gradients(self, mini_bundle):
        """Test frozen networks stop requiring gradients."""
        mini_bundle.freeze(STAGE1_FROZEN)
        assert mini_bundle.frozen == frozenset(STAGE1_FROZEN)
        assert all(not p.requires_grad for p in mini_bundle.parameters(STAGE1_FROZEN))
        assert all(p.requires_grad for p in mini_bundle.alignment.parameters())
        mini_bundle.verify_frozen()

    def test_drift_is_detected(self, mini_bundle):
        """Test changing a frozen weight raises FrozenViolationError."""
        mini_bundle.freeze(["decoder"])
        with torch.no_grad():
            next(mini_bundle.decoder.parameters()).add_(1.0)
        with pytest.raises(FrozenViolationError) as exc_info:
            mini_bundle.verify_frozen()
        assert exc_info.value.details["networks"] == ["decoder"]

    def test_unfreeze(self, mini_bundle):
        """Test unfreeze() restores gradients and forgets the checksum."""
        mini_bundle.freeze(["critic"])
        mini_bundle.unfreeze(["critic"])
        assert mini_bundle.frozen == frozenset()
        assert all(p.requires_grad for p in mini_bundle.critic.parameters())


class TestCheckpoint:
    """Tests for save_checkpoint() and load_checkpoint()."""

    def test_round_trip(self, mini_bundle, tmp_path):
        """Test weights, frozen set and metadata survive bit-exactly."""
        mini_bundle.freeze(STAGE1_FROZEN)
        path = save_checkpoint(
            tmp_path / "checkpoint.pt",
            Checkpoint(bundle=mini_bundle, stage=1, epoch=4, extra={"note": "x"}),
        )
        loaded = load_checkpoint(path)
        assert loaded.bundle.checksums() == mini_bundle.checksums()
        assert loaded.bundle.frozen == frozenset(STAGE1_FROZEN)
        assert loaded.bundle.dtype == torch.float64
        assert loaded.bundle.config == mini_bundle.config
        assert (loaded.stage, loaded.epoch) == (1, 4)
        assert loaded.extra == {"note": "x"}

    def test_missing_file(self, tmp_path):
        """Test a missing checkpoint raises InputError with a hint."""
        with pytest.raises(InputError) as exc_info:
            load_checkpoint(tmp_path / "nope.pt")
        assert exc_info.value.hint is not None

    def test_unreadable_file(self, tmp_path):
        """Test garbage bytes raise InputError."""
        path = tmp_path / "bad.pt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(InputError, match="Cannot read"):
            load_checkpoint(path)
