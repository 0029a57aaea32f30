"""
Tests for seeded substreams, activation and channel sampling.
"""

import numpy as np
import pytest
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.config import SystemConfig
from utils.errors import ConfigurationError
from utils.model import (
    PILOT_NORM_TOL, ActivityVector, ChannelRealization, Stream, complex_normal, pilot_energy,
    sample_activity, sample_channels, sample_pilots, slot_rng
)


class TestSlotRng:
    """Counter-based substreams."""

    def test_same_key_same_draws(self):
        """(seed, block, stream) fully determines the draws."""
        a = slot_rng(7, 3, Stream.ACCESS).random(5)
        b = slot_rng(7, 3, Stream.ACCESS).random(5)
        assert np.array_equal(a, b), "Same key should reproduce the draws"

    def test_streams_and_blocks_differ(self):
        """Changing any part of the key changes the draws."""
        base = slot_rng(7, 3, Stream.ACCESS).random(5)
        assert not np.array_equal(base, slot_rng(7, 3, Stream.CHANNEL).random(5)), "Stream should matter"
        assert not np.array_equal(base, slot_rng(7, 4, Stream.ACCESS).random(5)), "Block should matter"
        assert not np.array_equal(base, slot_rng(8, 3, Stream.ACCESS).random(5)), "Seed should matter"

    def test_noise_stream_independent_of_channel(self):
        """Receiver noise and channel gains use different substreams of a slot."""
        noise = slot_rng(7, 3, Stream.NOISE).random(5)
        assert not np.array_equal(noise, slot_rng(7, 3, Stream.CHANNEL).random(5)), "NOISE should differ from CHANNEL"

    def test_large_seed_accepted(self):
        """Any unsigned 64-bit seed works."""
        assert 0.0 <= slot_rng(2 ** 64 - 1).random() < 1.0, "Draw should be a unit uniform"


class TestSampling:
    """Activation flags, pilots and gains."""

    def test_pilot_energy_is_linear_snr(self):
        """dB to linear."""
        assert pilot_energy(20.0) == pytest.approx(100.0), "20 dB is 100"
        assert pilot_energy(0.0) == pytest.approx(1.0), "0 dB is 1"

    def test_complex_normal_unit_variance(self):
        """CN(0, 1) has unit power and zero mean."""
        z = complex_normal(slot_rng(1), 200000)
        assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02), "Power should be one"
        assert abs(np.mean(z)) < 0.01, "Mean should be zero"

    def test_activity_extremes(self):
        """Probability 0 activates nobody, probability 1 everybody."""
        rng = slot_rng(0)
        assert sample_activity(SystemConfig(n_users=50, activity_prob=0.0), rng).count == 0, "Nobody active"
        assert sample_activity(SystemConfig(n_users=50, activity_prob=1.0), rng).count == 50, "Everybody active"

    def test_activity_indices_are_zero_based(self):
        """User indices run from 0."""
        act = ActivityVector(np.array([False, True, False, True]))
        assert act.active_indices.tolist() == [1, 3], "Indices of the set flags"
        assert act.n_users == 4, "User count is the vector length"

    def test_pilot_columns_unit_norm(self):
        """Every pilot column has unit energy."""
        cfg = SystemConfig(n_users=300, pilot_len=40)
        pilots = sample_pilots(cfg, slot_rng(2))
        assert pilots.shape == (40, 300), f"Unexpected shape {pilots.shape}"
        norms = np.sum(np.abs(pilots) ** 2, axis=0)
        assert np.all(np.abs(norms - 1.0) <= PILOT_NORM_TOL), "Columns should be normalized"

    def test_channels_reuse_given_pilots(self):
        """A shared pilot book is used as is."""
        cfg = SystemConfig(n_users=30, pilot_len=10)
        pilots = sample_pilots(cfg, slot_rng(3))
        chan = sample_channels(cfg, slot_rng(4), pilots=pilots)
        assert np.array_equal(chan.pilot_matrix, pilots), "Pilot book should be reused"
        assert chan.gains.shape == (30,), "One gain per user"
        assert chan.matches(cfg), "Realization should match its config"

    def test_channel_rejects_unnormalized_pilots(self):
        """Pilot columns off unit norm are rejected."""
        with pytest.raises(ConfigurationError):
            ChannelRealization(gains=np.ones(3), pilot_matrix=2.0 * np.eye(3))

    def test_channel_rejects_shape_mismatch(self):
        """Gains and pilot columns must agree in number."""
        with pytest.raises(ConfigurationError):
            ChannelRealization(gains=np.ones(4), pilot_matrix=np.eye(3))
