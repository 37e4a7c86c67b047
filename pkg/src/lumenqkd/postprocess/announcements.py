"""Public basis and intensity announcements."""

from dataclasses import dataclass

import numpy as np

from lumenqkd.model import CODE_BASIS_INDEX, CODE_INTENSITY_INDEX, Basis, IntensityClass

# Announcement classes used by synchronization: (basis, intensity) pairs plus vacuum.
ANNOUNCED_CLASSES: tuple[tuple[Basis | None, IntensityClass], ...] = (
    (Basis.HV, IntensityClass.SIGNAL),
    (Basis.HV, IntensityClass.DECOY),
    (Basis.LR, IntensityClass.SIGNAL),
    (Basis.LR, IntensityClass.DECOY),
    (None, IntensityClass.VACUUM),
)
NUM_ANNOUNCED_CLASSES = len(ANNOUNCED_CLASSES)


@dataclass(frozen=True, eq=False)
class PublicAnnouncement:
    """What Alice publishes for every transmitted slot.

    Only the basis and the intensity class are present; the bit value of a
    slot cannot be recovered from this record.

    Attributes:
        basis: Basis index per slot (HV=0, LR=1, -1 for vacuum)
        intensity: Intensity index per slot (signal=0, decoy=1, vacuum=2)
    """

    basis: np.ndarray
    intensity: np.ndarray

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=np.int8)
        intensity = np.asarray(self.intensity, dtype=np.int8)
        if basis.shape != intensity.shape or basis.ndim != 1:
            raise ValueError("basis and intensity must be equal-length 1-D arrays")
        vacuum = intensity == IntensityClass.VACUUM.index
        if np.any(basis[vacuum] != -1) or np.any(basis[~vacuum] < 0):
            raise ValueError("vacuum slots carry no basis and all other slots carry one")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "intensity", intensity)

    def __len__(self) -> int:
        return int(self.basis.size)

    @property
    def classes(self) -> np.ndarray:
        """Announcement class index per slot, following ANNOUNCED_CLASSES."""
        return np.where(
            self.intensity == IntensityClass.VACUUM.index,
            NUM_ANNOUNCED_CLASSES - 1,
            2 * self.basis + self.intensity,
        ).astype(np.int8)

    def shuffled(self, rng: np.random.Generator) -> "PublicAnnouncement":
        """Return the announcements in a random slot order."""
        order = rng.permutation(len(self))
        return PublicAnnouncement(basis=self.basis[order], intensity=self.intensity[order])


def announce(codes: np.ndarray) -> PublicAnnouncement:
    """Build the public announcement for a preparation log of state codes."""
    codes = np.asarray(codes, dtype=np.int64)
    return PublicAnnouncement(basis=CODE_BASIS_INDEX[codes], intensity=CODE_INTENSITY_INDEX[codes])
