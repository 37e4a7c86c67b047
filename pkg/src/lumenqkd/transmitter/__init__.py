"""Transmitter simulation: state selection, photon sources, timing and spectra."""

from lumenqkd.transmitter.alignment import (
    AlignmentResult,
    TimingAdjustment,
    adjust_profile,
    align_temporal_profiles,
)
from lumenqkd.transmitter.filters import (
    FilterResult,
    FilterShape,
    FilterSpec,
    apply_spectral_filter,
)
from lumenqkd.transmitter.photons import photon_number_pmf, sample_photon_number
from lumenqkd.transmitter.profiles import (
    SideChannelProfile,
    SourceProfile,
    default_profiles,
    load_profile_csv,
    write_profile_csv,
)
from lumenqkd.transmitter.selection import (
    build_lookup,
    select_codes,
    select_state,
    sending_probabilities,
)
from lumenqkd.transmitter.timeline import (
    ActiveInterval,
    SessionTimeline,
    grid_to_slot,
    session_timeline,
    slot_grid_index,
)
from lumenqkd.transmitter.wavepacket import Wavepacket, emit_wavepacket

__all__ = [
    "ActiveInterval",
    "AlignmentResult",
    "FilterResult",
    "FilterShape",
    "FilterSpec",
    "SessionTimeline",
    "SideChannelProfile",
    "SourceProfile",
    "TimingAdjustment",
    "Wavepacket",
    "adjust_profile",
    "align_temporal_profiles",
    "apply_spectral_filter",
    "build_lookup",
    "default_profiles",
    "emit_wavepacket",
    "grid_to_slot",
    "load_profile_csv",
    "photon_number_pmf",
    "sample_photon_number",
    "select_codes",
    "select_state",
    "sending_probabilities",
    "session_timeline",
    "slot_grid_index",
    "write_profile_csv",
]
