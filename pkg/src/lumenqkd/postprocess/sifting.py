"""Pairing of detections with slots, and sifting into key and estimation sets.

Key records are L/R preparations measured on the L/R detectors; the key bit
is 0 for R and 1 for L. H preparations measured on the H/V detectors are
kept for parameter estimation and never become key material. Clicks in
vacuum slots form the background set.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.model import (
    CODE_INTENSITY_INDEX,
    CODE_STATE_INDEX,
    INTENSITY_ORDER,
    STATE_ORDER,
    VACUUM_CODE,
    IntensityClass,
    PolarizationState,
)

logger = logging.getLogger(__name__)

_H = PolarizationState.H.index
_L = PolarizationState.L.index
_R = PolarizationState.R.index


@dataclass(frozen=True)
class SiftedRecord:
    """One sifted event.

    Attributes:
        slot_index: Active-slot index
        alice_state: Prepared polarization, None for a vacuum slot
        bob_detector: Detector that fired
        intensity: Intensity class of the slot
    """

    slot_index: int
    alice_state: PolarizationState | None
    bob_detector: PolarizationState
    intensity: IntensityClass


@dataclass(frozen=True, eq=False)
class PairedDetections:
    """Detections matched to the slot they belong to.

    Attributes:
        slot_index: Active-slot index per detection
        state_code: Alice's state code for that slot
        detector: Detector index per detection
        unassigned: Detections that fell in a halt or outside the session
        double_clicks: Slots where both detectors of one basis fired
        clicked_slots: Every slot with at least one click, double clicks included
    """

    slot_index: np.ndarray
    state_code: np.ndarray
    detector: np.ndarray
    unassigned: int = 0
    double_clicks: int = 0
    clicked_slots: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.slot_index.size)


def pair_detections(
    codes: np.ndarray, slots: np.ndarray, detectors: np.ndarray
) -> PairedDetections:
    """Attach Alice's state codes to detections that carry a slot index.

    Several clicks on the same detector within one slot count once. When
    both detectors of a basis fire in the same slot the outcome is
    ambiguous: the slot is counted as a double click and both clicks are
    dropped.

    Args:
        codes: State code per active slot
        slots: Slot index per detection, -1 when unassigned
        detectors: Detector index per detection

    Returns:
        PairedDetections in slot order
    """
    codes = np.asarray(codes)
    slots = np.asarray(slots, dtype=np.int64)
    detectors = np.asarray(detectors, dtype=np.int64)

    assigned = slots >= 0
    unassigned = int(np.count_nonzero(~assigned))
    slots, detectors = slots[assigned], detectors[assigned]
    if slots.size == 0:
        return PairedDetections(
            slot_index=np.empty(0, dtype=np.int64),
            state_code=np.empty(0, dtype=np.uint8),
            detector=np.empty(0, dtype=np.int8),
            unassigned=unassigned,
        )

    group = slots * 2 + detectors // 2
    order = np.argsort(group, kind="stable")
    group, slots, detectors = group[order], slots[order], detectors[order]
    starts = np.flatnonzero(np.r_[True, group[1:] != group[:-1]])
    first = np.minimum.reduceat(detectors, starts)
    last = np.maximum.reduceat(detectors, starts)
    single = first == last

    double_clicks = int(np.count_nonzero(~single))
    if double_clicks:
        logger.debug("Excluding %d double click(s)", double_clicks)
    keep = starts[single]
    return PairedDetections(
        slot_index=slots[keep],
        state_code=codes[slots[keep]],
        detector=detectors[keep].astype(np.int8),
        unassigned=unassigned,
        double_clicks=double_clicks,
        clicked_slots=np.unique(slots),
    )


@dataclass(frozen=True, eq=False)
class RecordSet:
    """A column-oriented set of sifted records."""

    slot_index: np.ndarray
    state_code: np.ndarray
    detector: np.ndarray

    def __len__(self) -> int:
        return int(self.slot_index.size)

    def __iter__(self) -> Iterator[SiftedRecord]:
        for slot, code, det in zip(self.slot_index, self.state_code, self.detector, strict=True):
            state = int(CODE_STATE_INDEX[code])
            yield SiftedRecord(
                slot_index=int(slot),
                alice_state=STATE_ORDER[state] if state >= 0 else None,
                bob_detector=STATE_ORDER[int(det)],
                intensity=INTENSITY_ORDER[int(CODE_INTENSITY_INDEX[code])],
            )

    @property
    def alice_state(self) -> np.ndarray:
        return CODE_STATE_INDEX[self.state_code]

    @property
    def intensity(self) -> np.ndarray:
        return CODE_INTENSITY_INDEX[self.state_code]

    @property
    def errors(self) -> np.ndarray:
        """True where the detector differs from the prepared state."""
        return self.detector != self.alice_state

    def subset(self, mask: np.ndarray) -> "RecordSet":
        return RecordSet(self.slot_index[mask], self.state_code[mask], self.detector[mask])

    def permuted(self, rng: np.random.Generator) -> "RecordSet":
        return self.subset(rng.permutation(len(self)))


@dataclass(frozen=True, eq=False)
class SiftedRecords:
    """Output of sifting.

    Attributes:
        key: L/R preparations measured in the L/R basis
        parameter: H preparations measured in the H/V basis
        background: Clicks in vacuum slots
        discarded: Basis-mismatched detections
        double_clicks: Slots dropped for a double click
    """

    key: RecordSet
    parameter: RecordSet
    background: RecordSet
    discarded: int = 0
    double_clicks: int = 0

    @property
    def alice_key_bits(self) -> np.ndarray:
        return (self.key.alice_state == _L).astype(np.uint8)

    @property
    def bob_key_bits(self) -> np.ndarray:
        return (self.key.detector == _L).astype(np.uint8)

    @property
    def n_sifted(self) -> int:
        return len(self.key) + len(self.parameter)

    def key_rate(self, active_seconds: float) -> float:
        """Raw key rate in bit/s over the active transmission time."""
        if active_seconds <= 0:
            raise ValueError("active time must be positive")
        return len(self.key) / active_seconds


def sift(paired: PairedDetections) -> SiftedRecords:
    """Split paired detections into key, parameter-estimation and background sets."""
    state = CODE_STATE_INDEX[paired.state_code]
    detector = paired.detector.astype(np.int64)
    circular_detector = (detector == _L) | (detector == _R)

    vacuum = paired.state_code == VACUUM_CODE
    key = ((state == _L) | (state == _R)) & circular_detector
    parameter = (state == _H) & ~circular_detector
    discarded = ~(vacuum | key | parameter)

    def take(mask: np.ndarray) -> RecordSet:
        return RecordSet(paired.slot_index[mask], paired.state_code[mask], paired.detector[mask])

    records = SiftedRecords(
        key=take(key),
        parameter=take(parameter),
        background=take(vacuum),
        discarded=int(np.count_nonzero(discarded)),
        double_clicks=paired.double_clicks,
    )
    logger.info(
        "Sifted %d key, %d parameter-estimation and %d background records (%d discarded)",
        len(records.key),
        len(records.parameter),
        len(records.background),
        records.discarded,
    )
    return records
