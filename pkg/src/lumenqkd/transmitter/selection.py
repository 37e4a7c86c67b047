"""Threshold-based random state selection.

Each slot the transmitter draws one random byte; the inclusive byte range
it falls into selects the state code, and range widths fix the sending
probabilities.
"""

from collections.abc import Sequence

import numpy as np

from lumenqkd.model import LEGAL_CLASSES, PreparationClass

Thresholds = Sequence[tuple[int, int]]


def build_lookup(thresholds: Thresholds) -> np.ndarray:
    """Build the 256-entry byte → state-code table.

    Args:
        thresholds: Inclusive ranges indexed by state code

    Returns:
        uint8 array where entry b is the code selected by byte b
    """
    table = np.full(256, 255, dtype=np.uint8)
    for code, (lo, hi) in enumerate(thresholds):
        table[lo : hi + 1] = code
    if np.any(table == 255):
        raise ValueError("thresholds do not cover every byte value")
    return table


def select_state(random_byte: int, thresholds: Thresholds) -> PreparationClass:
    """Return the preparation class whose range contains ``random_byte``."""
    if not 0 <= random_byte <= 255:
        raise ValueError(f"random byte {random_byte} outside 0..255")
    for code, (lo, hi) in enumerate(thresholds):
        if lo <= random_byte <= hi:
            return LEGAL_CLASSES[code]
    raise ValueError(f"no threshold range contains {random_byte}")


def select_codes(random_bytes: np.ndarray, thresholds: Thresholds) -> np.ndarray:
    """Vectorised select_state returning state codes."""
    return build_lookup(thresholds)[np.asarray(random_bytes, dtype=np.uint8)]


def sending_probabilities(thresholds: Thresholds) -> dict[PreparationClass, float]:
    """Probability of sending each class: range width / 256."""
    return {LEGAL_CLASSES[code]: (hi - lo + 1) / 256 for code, (lo, hi) in enumerate(thresholds)}


def sending_probability_array(thresholds: Thresholds) -> np.ndarray:
    """sending_probabilities as an array indexed by state code."""
    return np.array([(hi - lo + 1) / 256 for lo, hi in thresholds], dtype=float)
