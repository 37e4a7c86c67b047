"""Tests for per-channel QBER."""

import numpy as np
import pytest

from lumenqkd.config import SessionConfig
from lumenqkd.postprocess import compute_qber, pair_detections, sift
from lumenqkd.session import simulate_session
from lumenqkd.yaml_config import resolve_preset


def records_from(codes, detectors):
    codes = np.asarray(codes)
    return sift(pair_detections(codes, np.arange(codes.size), np.asarray(detectors)))


class TestComputeQBER:
    """Test suite for compute_qber function."""

    @pytest.fixture
    def report(self):
        codes = [0] * 100 + [2] * 100
        detectors = [3] * 98 + [2] * 2 + [0] * 90 + [1] * 10
        return compute_qber(records_from(codes, detectors))

    def test_channel_rates(self, report):
        """Test R and H rates from hand-made counts; L has no records."""
        assert report.r_qber == pytest.approx(0.02)
        assert report.h_qber == pytest.approx(0.10)
        assert report.l_qber is None
        assert report.mean_qber == pytest.approx(0.06)

    def test_counts_and_sigma(self, report):
        """Test the N_X^Y counts and binomial errors."""
        assert report.counts == {
            "N_R^R": 98,
            "N_L^R": 2,
            "N_L^L": 0,
            "N_R^L": 0,
            "N_H^H": 90,
            "N_V^H": 10,
        }
        assert report.sigma["R"] == pytest.approx(np.sqrt(0.02 * 0.98 / 100))
        assert "L" not in report.sigma

    def test_limit(self, report):
        """Test the verdict against the default and a tighter limit."""
        assert report.within_limit
        assert "below" in report.message

        tight = compute_qber(records_from([0] * 100, [3] * 98 + [2] * 2), limit=0.01)
        assert not tight.within_limit
        assert "exceeds" in tight.message

    def test_no_records(self):
        """Test that an empty record set leaves every channel undefined."""
        report = compute_qber(records_from([], []))

        assert report.mean_qber is None
        assert not report.within_limit
        assert report.message.startswith("QBER undefined")

    def test_to_dict(self, report):
        """Test the report keys."""
        data = report.to_dict()

        assert data["R_QBER"] == pytest.approx(0.02)
        assert data["L_QBER"] is None
        assert data["within_limit"] is True

    def test_simulated_rate_matches_flip_probability(self, slot_assigner):
        """Test that a 2% polarization error shows up as ~2% QBER on every channel."""
        session = simulate_session(SessionConfig(rng_seed=11, polarization_error_prob=0.02), 0.05)
        paired = pair_detections(
            session.codes, slot_assigner(session), session.detections.detectors
        )

        report = compute_qber(sift(paired))

        for channel, q in report.channels.items():
            assert abs(q - 0.02) < 4 * report.sigma[channel] + 0.002

    def test_tabletop_preset_rates(self, slot_assigner):
        """Test that the tabletop preset reproduces 1.93%, 1.50% and 2.05% on R, L and H."""
        config = SessionConfig(**resolve_preset("tabletop"), rng_seed=12)
        session = simulate_session(config, 0.1)
        slots = slot_assigner(session)
        paired = pair_detections(session.codes, slots, session.detections.detectors)

        report = compute_qber(sift(paired))

        for channel, q in {"R": 0.0193, "L": 0.0150, "H": 0.0205}.items():
            assert abs(report.channels[channel] - q) < 4 * report.sigma[channel] + 0.002
        assert report.mean_qber < config.qber_limit
