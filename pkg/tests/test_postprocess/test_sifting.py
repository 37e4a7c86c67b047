"""Tests for detection pairing and sifting."""

import numpy as np
import pytest

from lumenqkd.config import PS_PER_S
from lumenqkd.model import IntensityClass, PolarizationState
from lumenqkd.postprocess import pair_detections, sift

# Slots: R, L, H, vacuum, R, L (all signal).
CODES = np.array([0, 1, 2, 6, 0, 1])
# R twice on R; L on H; H on V; vacuum on H; R on both L and R; L on L; one unassigned.
SLOTS = np.array([0, 0, 1, 2, 3, 4, 4, 5, -1])
DETECTORS = np.array([3, 3, 0, 1, 0, 2, 3, 2, 0])


@pytest.fixture
def paired():
    return pair_detections(CODES, SLOTS, DETECTORS)


class TestPairDetections:
    """Test suite for pair_detections function."""

    def test_counts(self, paired):
        """Test repeated clicks, double clicks and unassigned detections."""
        assert paired.slot_index.tolist() == [0, 1, 2, 3, 5]
        assert paired.double_clicks == 1
        assert paired.unassigned == 1
        assert paired.clicked_slots.tolist() == [0, 1, 2, 3, 4, 5]

    def test_state_codes_attached(self, paired):
        """Test that every paired detection carries its slot's state code."""
        assert paired.state_code.tolist() == [0, 1, 2, 6, 1]

    def test_nothing_assigned(self):
        """Test that all-unassigned detections give an empty pairing."""
        paired = pair_detections(CODES, np.array([-1, -1]), np.array([0, 1]))

        assert len(paired) == 0
        assert paired.unassigned == 2


class TestSift:
    """Test suite for sift function."""

    def test_sets(self, paired):
        """Test the split into key, parameter and background records."""
        records = sift(paired)

        assert records.key.slot_index.tolist() == [0, 5]
        assert records.parameter.slot_index.tolist() == [2]
        assert records.background.slot_index.tolist() == [3]
        assert records.discarded == 1
        assert records.double_clicks == 1
        assert records.n_sifted == 3

    def test_key_bits(self, paired):
        """Test that R is bit 0 and L is bit 1 on both sides."""
        records = sift(paired)

        assert records.alice_key_bits.tolist() == [0, 1]
        assert records.bob_key_bits.tolist() == [0, 1]

    def test_parameter_error(self, paired):
        """Test that an H preparation on the V detector is an error."""
        assert sift(paired).parameter.errors.tolist() == [True]

    def test_record_iteration(self, paired):
        """Test that iterating a record set yields typed records."""
        (record,) = list(sift(paired).background)

        assert record.alice_state is None
        assert record.bob_detector is PolarizationState.H
        assert record.intensity is IntensityClass.VACUUM

    def test_key_rate(self, paired):
        """Test the raw key rate over the active time."""
        records = sift(paired)

        assert records.key_rate(2.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            records.key_rate(0.0)

    def test_simulated_key_never_from_h(self, short_session, slot_assigner):
        """Test that no key record of a simulated session comes from an H preparation."""
        paired = pair_detections(
            short_session.codes, slot_assigner(short_session), short_session.detections.detectors
        )
        records = sift(paired)

        assert len(records.key) > 0
        assert np.all(np.isin(records.key.alice_state, [2, 3]))
        assert np.all(records.parameter.alice_state == 0)

    def test_default_key_rate_magnitude(self, short_session, slot_assigner):
        """Test that the default session sifts between 10^5 and 10^6 key bits per second."""
        session = short_session
        slots = slot_assigner(session)
        paired = pair_detections(session.codes, slots, session.detections.detectors)
        active = session.n_slots * session.config.slot_period_ps / PS_PER_S

        rate = sift(paired).key_rate(active)

        assert 1e5 <= rate <= 1e6
