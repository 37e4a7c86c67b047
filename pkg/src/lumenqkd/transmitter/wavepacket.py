"""Per-slot wavepacket emission."""

from dataclasses import dataclass

import numpy as np

from lumenqkd.config import SessionConfig
from lumenqkd.exceptions import ProfileError
from lumenqkd.model import AlicePreparation, SideChannelAxis
from lumenqkd.transmitter.alignment import TimingAdjustment, adjust_profile
from lumenqkd.transmitter.photons import sample_photon_number
from lumenqkd.transmitter.profiles import SourceProfile
from lumenqkd.transmitter.timeline import slot_start_ps


@dataclass(frozen=True, eq=False)
class Wavepacket:
    """Photons emitted in one slot.

    Attributes:
        slot_index: Active-slot index
        state_code: State code of the preparation
        emission_times_ps: Absolute emission time of each photon
        wavelengths_nm: Wavelength of each photon (NaN without a spectral profile)
        polarizations: State index (H=0, V=1, L=2, R=3) of each photon
    """

    slot_index: int
    state_code: int
    emission_times_ps: np.ndarray
    wavelengths_nm: np.ndarray
    polarizations: np.ndarray

    @property
    def n_photons(self) -> int:
        return int(self.emission_times_ps.size)

    def select(self, keep: np.ndarray) -> "Wavepacket":
        """Return the photons flagged in ``keep``."""
        return Wavepacket(
            slot_index=self.slot_index,
            state_code=self.state_code,
            emission_times_ps=self.emission_times_ps[keep],
            wavelengths_nm=self.wavelengths_nm[keep],
            polarizations=self.polarizations[keep],
        )


def _check_profile(
    profile: SourceProfile | None, prep: AlicePreparation, axis: SideChannelAxis
) -> SourceProfile:
    if profile is None:
        raise ProfileError(f"no {axis.value} profile for {prep.preparation_class.label}")
    if profile.state_code != prep.state_code or profile.axis is not axis:
        raise ProfileError(
            f"{profile.axis.value} profile of {profile.label} does not match "
            f"{prep.preparation_class.label}"
        )
    return profile


def emit_wavepacket(
    prep: AlicePreparation,
    temporal: SourceProfile | None,
    spectral: SourceProfile | None,
    timing: TimingAdjustment,
    config: SessionConfig,
    rng: np.random.Generator,
    slot_start: int | None = None,
) -> Wavepacket:
    """Emit the wavepacket of one prepared slot.

    The photon number follows the configured statistics at the class's mean
    photon number. Each photon's emission time is a bin centre drawn from the
    temporal pdf, shifted by the timing offset and the slot start; its
    wavelength is a bin centre drawn from the spectral pdf.

    Args:
        prep: The slot's preparation
        temporal: Temporal profile of the preparation class
        spectral: Spectral profile of the class, or None to skip wavelengths
        timing: Integer-step timing adjustment of the class
        config: Session configuration
        rng: Random generator
        slot_start: Slot start in ps; defaults to the slot's place on the timeline

    Raises:
        ProfileError: If a non-vacuum preparation has no matching temporal profile
    """
    if slot_start is None:
        slot_start = int(slot_start_ps(np.array([prep.slot_index]), config)[0])
    empty = Wavepacket(
        slot_index=prep.slot_index,
        state_code=prep.state_code,
        emission_times_ps=np.empty(0, dtype=np.int64),
        wavelengths_nm=np.empty(0, dtype=float),
        polarizations=np.empty(0, dtype=np.int8),
    )
    if prep.preparation_class.is_vacuum:
        return empty

    temporal = _check_profile(temporal, prep, SideChannelAxis.TEMPORAL)
    if spectral is not None:
        spectral = _check_profile(spectral, prep, SideChannelAxis.SPECTRAL)

    mu = config.mean_photon_number(prep.intensity)
    n = int(sample_photon_number(mu, config.photon_statistics, rng))
    if n == 0:
        return empty

    if timing.width_steps:
        temporal = adjust_profile(
            temporal, TimingAdjustment(0, timing.width_steps), config.timing_step_ps
        )
    time_bins = rng.choice(temporal.pdf.size, size=n, p=temporal.pdf)
    offset = timing.offset_steps * config.timing_step_ps
    times = slot_start + offset + np.rint(temporal.bin_centers[time_bins]).astype(np.int64)

    if spectral is not None:
        wavelengths = spectral.bin_centers[rng.choice(spectral.pdf.size, size=n, p=spectral.pdf)]
    else:
        wavelengths = np.full(n, np.nan)

    return Wavepacket(
        slot_index=prep.slot_index,
        state_code=prep.state_code,
        emission_times_ps=times,
        wavelengths_nm=wavelengths,
        polarizations=np.full(n, prep.state.index, dtype=np.int8),
    )
