"""Shared domain vocabulary for the three-state decoy BB84 protocol.

This module defines polarization states, measurement bases, intensity
classes and the 3-bit state code recorded for every transmission slot.
Integer indices used in vectorised code follow the enum order below
(H=0, V=1, L=2, R=3; HV=0, LR=1; signal=0, decoy=1, vacuum=2).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from lumenqkd.exceptions import InvalidPreparationError


class PolarizationState(str, Enum):
    """Polarization of a photon or the detector that registered it.

    Attributes:
        H: Linear horizontal
        V: Linear vertical
        L: Circular left
        R: Circular right
    """

    H = "H"
    V = "V"
    L = "L"
    R = "R"

    @property
    def index(self) -> int:
        return STATE_ORDER.index(self)

    @property
    def basis(self) -> "Basis":
        return Basis.HV if self in (PolarizationState.H, PolarizationState.V) else Basis.LR

    def orthogonal(self) -> "PolarizationState":
        """Return the orthogonal state within the same basis."""
        return _ORTHOGONAL[self]


class PhotonStatistics(str, Enum):
    """Photon-number distribution of an attenuated source."""

    THERMAL = "thermal"
    POISSON = "poisson"


class SideChannelAxis(str, Enum):
    """Degree of freedom measured by the eavesdropper."""

    SPECTRAL = "spectral"
    TEMPORAL = "temporal"


class Basis(str, Enum):
    """Measurement basis selected by Bob's non-polarizing beam splitter."""

    HV = "HV"
    LR = "LR"

    @property
    def index(self) -> int:
        return 0 if self is Basis.HV else 1


class IntensityClass(str, Enum):
    """Intensity class of a transmission slot.

    Mean photon numbers live in SessionConfig; vacuum is always zero.
    """

    SIGNAL = "signal"
    DECOY = "decoy"
    VACUUM = "vacuum"

    @property
    def index(self) -> int:
        return INTENSITY_ORDER.index(self)


STATE_ORDER: tuple[PolarizationState, ...] = (
    PolarizationState.H,
    PolarizationState.V,
    PolarizationState.L,
    PolarizationState.R,
)
INTENSITY_ORDER: tuple[IntensityClass, ...] = (
    IntensityClass.SIGNAL,
    IntensityClass.DECOY,
    IntensityClass.VACUUM,
)
TRANSMITTER_STATES: frozenset[PolarizationState] = frozenset(
    {PolarizationState.H, PolarizationState.L, PolarizationState.R}
)

_ORTHOGONAL = {
    PolarizationState.H: PolarizationState.V,
    PolarizationState.V: PolarizationState.H,
    PolarizationState.L: PolarizationState.R,
    PolarizationState.R: PolarizationState.L,
}


@dataclass(frozen=True)
class PreparationClass:
    """One of the seven legal (state, intensity) combinations.

    Attributes:
        state: Polarization, or None for the vacuum class
        intensity: Intensity class
    """

    state: PolarizationState | None
    intensity: IntensityClass

    @property
    def code(self) -> int:
        return encode_state_code(self.state, self.intensity)

    @property
    def is_vacuum(self) -> bool:
        return self.intensity is IntensityClass.VACUUM

    @property
    def label(self) -> str:
        if self.is_vacuum:
            return "vacuum"
        return f"{self.intensity.value}-{self.state.value}"


LEGAL_CLASSES: tuple[PreparationClass, ...] = (
    PreparationClass(PolarizationState.R, IntensityClass.SIGNAL),
    PreparationClass(PolarizationState.L, IntensityClass.SIGNAL),
    PreparationClass(PolarizationState.H, IntensityClass.SIGNAL),
    PreparationClass(PolarizationState.R, IntensityClass.DECOY),
    PreparationClass(PolarizationState.L, IntensityClass.DECOY),
    PreparationClass(PolarizationState.H, IntensityClass.DECOY),
    PreparationClass(None, IntensityClass.VACUUM),
)
VACUUM_CODE = 6
RESERVED_CODE = 7
NUM_CODES = len(LEGAL_CLASSES)

# Lookup tables indexed by state code; -1 marks "no polarization".
CODE_STATE_INDEX = np.array(
    [c.state.index if c.state is not None else -1 for c in LEGAL_CLASSES], dtype=np.int8
)
CODE_INTENSITY_INDEX = np.array([c.intensity.index for c in LEGAL_CLASSES], dtype=np.int8)
CODE_BASIS_INDEX = np.array(
    [c.state.basis.index if c.state is not None else -1 for c in LEGAL_CLASSES], dtype=np.int8
)


def encode_state_code(state: PolarizationState | None, intensity: IntensityClass) -> int:
    """Encode a preparation as its 3-bit state code.

    Args:
        state: Prepared polarization; ignored (may be None) for vacuum
        intensity: Intensity class

    Returns:
        Integer code in 0..6

    Raises:
        InvalidPreparationError: If the combination is never sent
    """
    intensity = IntensityClass(intensity)
    if intensity is IntensityClass.VACUUM:
        if state is not None and PolarizationState(state) not in TRANSMITTER_STATES:
            raise InvalidPreparationError(f"State {state} is never prepared by the transmitter")
        return VACUUM_CODE
    if state is None:
        raise InvalidPreparationError(f"{intensity.value} preparation requires a polarization")
    state = PolarizationState(state)
    if state not in TRANSMITTER_STATES:
        raise InvalidPreparationError(
            f"State {state.value} is never prepared in the three-state protocol"
        )
    return LEGAL_CLASSES.index(PreparationClass(state, intensity))


def decode_state_code(code: int) -> PreparationClass:
    """Decode a 3-bit state code.

    Raises:
        InvalidPreparationError: For the reserved code 7 or values outside 0..7
    """
    if not 0 <= int(code) < NUM_CODES:
        raise InvalidPreparationError(f"State code {code} is reserved or out of range")
    return LEGAL_CLASSES[int(code)]


@dataclass(frozen=True)
class AlicePreparation:
    """The transmitter's choice for one slot.

    Attributes:
        slot_index: Index of the transmission slot (active slots only)
        state: Polarization, None for vacuum
        intensity: Intensity class
    """

    slot_index: int
    state: PolarizationState | None
    intensity: IntensityClass

    def __post_init__(self) -> None:
        if self.slot_index < 0:
            raise InvalidPreparationError("slot_index must be non-negative")
        # Validates the combination.
        encode_state_code(self.state, self.intensity)

    @property
    def state_code(self) -> int:
        return encode_state_code(self.state, self.intensity)

    @property
    def preparation_class(self) -> PreparationClass:
        return decode_state_code(self.state_code)

    @classmethod
    def from_code(cls, slot_index: int, code: int) -> "AlicePreparation":
        prep = decode_state_code(code)
        return cls(slot_index=slot_index, state=prep.state, intensity=prep.intensity)
