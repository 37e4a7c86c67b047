"""Tests for threshold-based state selection."""

import numpy as np
import pytest

from lumenqkd.config import DEFAULT_THRESHOLDS
from lumenqkd.model import LEGAL_CLASSES, VACUUM_CODE
from lumenqkd.transmitter import build_lookup, select_codes, select_state, sending_probabilities


class TestSelectState:
    """Test suite for select_state function."""

    @pytest.mark.parametrize(
        "byte,code",
        [(0, 0), (50, 0), (51, 1), (101, 1), (102, 2), (179, 2), (180, 3), (228, 5), (255, 6)],
    )
    def test_range_boundaries(self, byte, code):
        """Test that inclusive range boundaries select the right class."""
        assert select_state(byte, DEFAULT_THRESHOLDS) == LEGAL_CLASSES[code]

    def test_byte_out_of_range(self):
        """Test that a value outside 0..255 raises ValueError."""
        with pytest.raises(ValueError):
            select_state(256, DEFAULT_THRESHOLDS)

    def test_lookup_matches_scalar(self):
        """Test that the vectorised lookup agrees with select_state on every byte."""
        table = build_lookup(DEFAULT_THRESHOLDS)
        for byte in range(256):
            assert LEGAL_CLASSES[table[byte]] == select_state(byte, DEFAULT_THRESHOLDS)


class TestSendingProbabilities:
    """Test suite for sending_probabilities function."""

    def test_probabilities_from_range_widths(self):
        """Test the published class probabilities."""
        probs = sending_probabilities(DEFAULT_THRESHOLDS)

        assert probs[LEGAL_CLASSES[0]] == pytest.approx(51 / 256)
        assert probs[LEGAL_CLASSES[2]] == pytest.approx(78 / 256)
        assert probs[LEGAL_CLASSES[VACUUM_CODE]] == pytest.approx(27 / 256)
        assert sum(probs.values()) == pytest.approx(1.0)

    def test_empirical_frequencies(self, rng):
        """Test that 10^6 uniform bytes reproduce every class frequency within 4 sigma."""
        n = 1_000_000
        codes = select_codes(rng.integers(0, 256, size=n, dtype=np.uint8), DEFAULT_THRESHOLDS)
        counts = np.bincount(codes, minlength=7)

        for code, (lo, hi) in enumerate(DEFAULT_THRESHOLDS):
            p = (hi - lo + 1) / 256
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(counts[code] - n * p) < 4 * sigma
