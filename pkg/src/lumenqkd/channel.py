"""Free-space channel and side-channel eavesdropper.

The channel loses photons independently with transmissivity eta and flips
a surviving photon to the orthogonal state of its basis with the residual
polarization error probability. Eve samples the side-channel degree of
freedom of every emitted wavepacket before the channel acts on it.
"""

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from lumenqkd.exceptions import ProfileError
from lumenqkd.model import STATE_ORDER, AlicePreparation, PolarizationState, SideChannelAxis
from lumenqkd.transmitter.profiles import SourceProfile
from lumenqkd.transmitter.wavepacket import Wavepacket


class ChannelParams(BaseModel):
    """Loss, polarization error and background of the quantum channel."""

    model_config = ConfigDict(frozen=True)

    transmissivity: float = Field(default=0.1, ge=0, le=1)
    polarization_error_prob: float = Field(default=0.0183, ge=0, le=0.5)
    polarization_error_by_state: dict[PolarizationState, float] | None = None
    background_rate: float = Field(default=0.0, ge=0, description="Counts/s per detector")
    drop_single_photons: bool = Field(
        default=False, description="Block every one-photon wavepacket (PNS tampering)"
    )

    @field_validator("polarization_error_by_state")
    @classmethod
    def validate_overrides(
        cls, v: dict[PolarizationState, float] | None
    ) -> dict[PolarizationState, float] | None:
        if v is not None and any(not 0.0 <= p <= 0.5 for p in v.values()):
            raise ValueError("per-state error probabilities must lie in [0, 0.5]")
        return v

    def error_prob_array(self) -> np.ndarray:
        """Flip probability indexed by state index (H, V, L, R)."""
        overrides = self.polarization_error_by_state or {}
        return np.array(
            [overrides.get(state, self.polarization_error_prob) for state in STATE_ORDER]
        )


@dataclass(frozen=True)
class EveObservation:
    """Eve's side-channel outcome for one slot."""

    slot_index: int
    axis: SideChannelAxis
    bin_index: int


def flip_polarizations(
    polarizations: np.ndarray, error_probs: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Flip each photon to its orthogonal state with its state's error probability.

    State indices pair up as H/V = 0/1 and L/R = 2/3, so the orthogonal
    state is the index with its lowest bit toggled.
    """
    polarizations = np.asarray(polarizations, dtype=np.int8)
    flipped = rng.random(polarizations.size) < error_probs[polarizations]
    return np.where(flipped, polarizations ^ 1, polarizations).astype(np.int8)


def transmit(
    wavepacket: Wavepacket, params: ChannelParams, rng: np.random.Generator
) -> Wavepacket:
    """Send one wavepacket through the channel.

    Emission times and wavelengths of survivors are untouched; only the
    photon count can drop and polarizations can flip.
    """
    if params.drop_single_photons and wavepacket.n_photons == 1:
        return wavepacket.select(np.zeros(1, dtype=bool))
    survive = rng.random(wavepacket.n_photons) < params.transmissivity
    survivors = wavepacket.select(survive)
    polarizations = flip_polarizations(survivors.polarizations, params.error_prob_array(), rng)
    return Wavepacket(
        slot_index=survivors.slot_index,
        state_code=survivors.state_code,
        emission_times_ps=survivors.emission_times_ps,
        wavelengths_nm=survivors.wavelengths_nm,
        polarizations=polarizations,
    )


def sample_eve_outcome(
    prep: AlicePreparation,
    profile: SourceProfile | None,
    axis: SideChannelAxis,
    rng: np.random.Generator,
) -> EveObservation | None:
    """Draw Eve's bin for one slot from p(E | A).

    Returns None for vacuum slots, which emit nothing to measure.

    Raises:
        ProfileError: If a non-vacuum slot has no profile on the requested axis
    """
    if prep.preparation_class.is_vacuum:
        return None
    axis = SideChannelAxis(axis)
    if profile is None or profile.axis is not axis or profile.state_code != prep.state_code:
        raise ProfileError(
            f"no {axis.value} profile for {prep.preparation_class.label} to sample from"
        )
    bin_index = int(rng.choice(profile.pdf.size, p=profile.pdf))
    return EveObservation(slot_index=prep.slot_index, axis=axis, bin_index=bin_index)


def sample_eve_bins(
    codes: np.ndarray, profiles: dict[int, SourceProfile], rng: np.random.Generator
) -> np.ndarray:
    """Vectorised sample_eve_outcome over a block of slots.

    Args:
        codes: State code per slot
        profiles: Profile per non-vacuum state code, all on one axis
        rng: Random generator

    Returns:
        int32 bin index per slot, -1 for vacuum slots
    """
    codes = np.asarray(codes)
    bins = np.full(codes.size, -1, dtype=np.int32)
    for code in np.unique(codes):
        if code >= 6:
            continue
        profile = profiles.get(int(code))
        if profile is None:
            raise ProfileError(f"no side-channel profile for state code {code}")
        mask = codes == code
        cdf = np.cumsum(profile.pdf)
        draws = np.searchsorted(cdf, rng.random(int(mask.sum())) * cdf[-1], side="right")
        bins[mask] = np.minimum(draws, profile.pdf.size - 1)
    return bins
