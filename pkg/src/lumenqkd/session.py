"""Event-level session driver: transmitter -> channel -> receiver.

Slots are simulated in vectorised chunks inside each active interval. Only
slots that put at least one photon on a detector are expanded to
per-photon arrays, so a session costs little more than drawing the random
bytes and photon numbers of every slot.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.channel import flip_polarizations, sample_eve_bins
from lumenqkd.config import PS_PER_S, SessionConfig
from lumenqkd.exceptions import ProfileError
from lumenqkd.model import CODE_INTENSITY_INDEX, CODE_STATE_INDEX, VACUUM_CODE, SideChannelAxis
from lumenqkd.receiver import NUM_DETECTORS, DetectorBank, sort_photons, time_tags
from lumenqkd.transmitter.alignment import TimingAdjustment, adjust_profile
from lumenqkd.transmitter.photons import sample_photon_number
from lumenqkd.transmitter.profiles import SourceProfile, default_profiles
from lumenqkd.transmitter.selection import select_codes
from lumenqkd.transmitter.timeline import SessionTimeline, session_timeline, slot_start_ps

logger = logging.getLogger(__name__)

CHUNK_SLOTS = 1 << 22

Profiles = dict[SideChannelAxis, dict[int, SourceProfile]]


@dataclass(frozen=True, eq=False)
class DetectionLog:
    """All registered clicks of a session in true-time order.

    Attributes:
        detectors: Detector index per click
        raw_tags: Time-tag counter values from Bob's clock
        true_time_ps: Ground-truth click time on Alice's clock
        slot_index: Ground-truth source slot, -1 for dark or background counts
    """

    detectors: np.ndarray
    raw_tags: np.ndarray
    true_time_ps: np.ndarray
    slot_index: np.ndarray

    def __len__(self) -> int:
        return int(self.detectors.size)


@dataclass(eq=False)
class SessionOutput:
    """Everything a simulated session produced.

    Attributes:
        config: Configuration the session ran with
        duration: Session length in seconds
        timeline: Active intervals and halts
        codes: State code per active slot
        detections: Detection log with ground truth
        eve_bins: Eve's bin per slot on ``eve_axis`` (-1 for vacuum), or None
        eve_axis: Axis Eve measured
        profiles: Profiles used for emission and Eve's sampling
    """

    config: SessionConfig
    duration: float
    timeline: SessionTimeline
    codes: np.ndarray
    detections: DetectionLog
    eve_bins: np.ndarray | None
    eve_axis: SideChannelAxis
    profiles: Profiles = field(repr=False, default_factory=dict)

    @property
    def n_slots(self) -> int:
        return int(self.codes.size)


def _temporal_tables(
    profiles: Profiles, timing: dict[int, TimingAdjustment], step_ps: int
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per-code (cdf, emission offset in ps) lookup for arrival sampling."""
    temporal = profiles.get(SideChannelAxis.TEMPORAL, {})
    missing = [code for code in range(VACUUM_CODE) if code not in temporal]
    if missing:
        raise ProfileError(f"no temporal profile for state code(s) {missing}")
    tables = {}
    for code, profile in temporal.items():
        adjustment = timing.get(code, TimingAdjustment())
        if adjustment.width_steps:
            profile = adjust_profile(profile, TimingAdjustment(0, adjustment.width_steps), step_ps)
        offsets = np.rint(profile.bin_centers).astype(np.int64) + adjustment.offset_steps * step_ps
        tables[code] = (np.cumsum(profile.pdf), offsets)
    return tables


def _sample_emission_offsets(
    codes: np.ndarray, tables: dict[int, tuple[np.ndarray, np.ndarray]], rng: np.random.Generator
) -> np.ndarray:
    out = np.zeros(codes.size, dtype=np.int64)
    for code in np.unique(codes):
        mask = codes == code
        cdf, offsets = tables[int(code)]
        idx = np.searchsorted(cdf, rng.random(int(mask.sum())) * cdf[-1], side="right")
        out[mask] = offsets[np.minimum(idx, offsets.size - 1)]
    return out


class _ChunkSimulator:
    """Simulates blocks of consecutive active slots with shared session state."""

    def __init__(
        self, config: SessionConfig, profiles: Profiles, timing: dict[int, TimingAdjustment]
    ):
        self.config = config
        self.channel = config.channel_params()
        self.bank = DetectorBank(
            config.detector_params(), config.tagger_tick_ps, config.tagger_bits
        )
        self.error_probs = self.channel.error_prob_array()
        mu_by_intensity = np.array([config.mu_signal, config.mu_decoy, 0.0])
        self.mu_by_code = mu_by_intensity[CODE_INTENSITY_INDEX]
        self.tables = _temporal_tables(profiles, timing, config.timing_step_ps)
        self.eve_profiles = profiles.get(config.eve_axis, {})

    def run(self, first: int, last: int, rng: np.random.Generator, record_eve: bool = True):
        """Simulate active slots [first, last).

        Returns:
            (codes, Eve bins or None, click times, click detectors, click source slots)
        """
        config = self.config
        slots = np.arange(first, last, dtype=np.int64)
        codes = select_codes(
            rng.integers(0, 256, size=slots.size, dtype=np.uint8), config.selection_thresholds
        )
        eve = sample_eve_bins(codes, self.eve_profiles, rng) if record_eve else None

        photons = sample_photon_number(self.mu_by_code[codes], config.photon_statistics, rng)
        if self.channel.drop_single_photons:
            photons[photons == 1] = 0
        survivors = rng.binomial(photons, self.channel.transmissivity)
        lit = np.flatnonzero(survivors)
        photon_slot = slots[np.repeat(lit, survivors[lit])]
        photon_codes = codes[photon_slot - first]

        states = flip_polarizations(CODE_STATE_INDEX[photon_codes], self.error_probs, rng)
        detectors = sort_photons(states, rng)
        arrivals = slot_start_ps(photon_slot, config) + _sample_emission_offsets(
            photon_codes, self.tables, rng
        )

        start = int(slot_start_ps(slots[:1], config)[0])
        batch = self.bank.detect_arrivals(
            arrivals,
            detectors,
            rng,
            window=(start, start + slots.size * config.slot_period_ps),
            background_rate=self.channel.background_rate,
        )
        source_slot = np.where(batch.source >= 0, photon_slot[np.maximum(batch.source, 0)], -1)
        return codes, eve, batch.times_ps, batch.detectors, source_slot


def simulate_session(
    config: SessionConfig,
    duration: float,
    profiles: Profiles | None = None,
    timing: dict[int, TimingAdjustment] | None = None,
) -> SessionOutput:
    """Simulate a full session.

    Args:
        config: Session configuration; ``rng_seed`` makes the run deterministic
        duration: Session length in seconds
        profiles: Per-axis, per-code profiles; synthetic defaults when None
        timing: Per-code timing adjustments of the temporal profiles

    Returns:
        SessionOutput with preparations, detections and Eve's observations

    Raises:
        ValueError: If duration is not positive
    """
    timeline = session_timeline(duration, config)
    profiles = profiles or default_profiles(config)
    rng = np.random.default_rng(config.rng_seed)
    chunker = _ChunkSimulator(config, profiles, timing or {})

    n_slots = timeline.total_slots
    codes = np.empty(n_slots, dtype=np.uint8)
    eve_bins = np.empty(n_slots, dtype=np.int32) if config.record_eve else None
    click_times, click_dets, click_slots = [], [], []
    halts = dict(timeline.gaps)
    if timeline.trailing_halt is not None:
        halts[timeline.trailing_halt[0]] = timeline.trailing_halt[1]

    logger.info(
        "Simulating %.3f s session: %d slots in %d active interval(s)",
        duration,
        n_slots,
        len(timeline.intervals),
    )
    for interval in timeline.intervals:
        end_slot = interval.first_slot + interval.n_slots
        for first in range(interval.first_slot, end_slot, CHUNK_SLOTS):
            last = min(first + CHUNK_SLOTS, end_slot)
            chunk_codes, chunk_eve, batch_times, batch_dets, batch_slots = chunker.run(
                first, last, rng, record_eve=eve_bins is not None
            )
            codes[first:last] = chunk_codes
            if eve_bins is not None:
                eve_bins[first:last] = chunk_eve
            click_times.append(batch_times)
            click_dets.append(batch_dets)
            click_slots.append(batch_slots)
            logger.debug("Slots %d-%d: %d clicks", first, last - 1, batch_times.size)

        if interval.end_ps in halts:
            # Detectors keep counting while the transmitter is halted.
            batch = chunker.bank.detect_arrivals(
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int8),
                rng,
                window=(interval.end_ps, halts[interval.end_ps]),
                background_rate=chunker.channel.background_rate,
            )
            click_times.append(batch.times_ps)
            click_dets.append(batch.detectors)
            click_slots.append(np.full(len(batch), -1, dtype=np.int64))

    times = np.concatenate(click_times) if click_times else np.empty(0, dtype=np.int64)
    dets = np.concatenate(click_dets) if click_dets else np.empty(0, dtype=np.int8)
    sources = np.concatenate(click_slots) if click_slots else np.empty(0, dtype=np.int64)
    order = np.argsort(times, kind="stable")
    times, dets, sources = times[order], dets[order], sources[order]

    local = bob_local_time_ps(times, config)
    detections = DetectionLog(
        detectors=dets,
        raw_tags=time_tags(local, config.tagger_tick_ps, config.tagger_bits),
        true_time_ps=times,
        slot_index=sources,
    )

    active = max(timeline.active_time_s, 1e-12)
    max_rate = chunker.bank.params.max_count_rate
    for d in range(NUM_DETECTORS):
        rate = float(np.count_nonzero(dets == d)) / active
        if rate > max_rate:
            logger.warning(
                "Detector %d count rate %.3g Hz exceeds saturation %.3g Hz", d, rate, max_rate
            )
    logger.info("Session finished: %d detections", len(detections))

    return SessionOutput(
        config=config,
        duration=duration,
        timeline=timeline,
        codes=codes,
        detections=detections,
        eve_bins=eve_bins,
        eve_axis=config.eve_axis,
        profiles=profiles,
    )


def bob_local_time_ps(true_time_ps: np.ndarray, config: SessionConfig) -> np.ndarray:
    """Map Alice-clock times to Bob's tagger clock: t * (1 + drift) + offset."""
    true_time_ps = np.asarray(true_time_ps, dtype=np.int64)
    drift_ps = np.rint(true_time_ps.astype(float) * config.clock_drift).astype(np.int64)
    return true_time_ps + drift_ps + round(config.clock_offset * PS_PER_S)


def binned_count_rates(
    times_ps: np.ndarray, detectors: np.ndarray, duration: float, bin_width: float = 0.1
) -> tuple[np.ndarray, np.ndarray]:
    """Per-detector count rates in fixed time bins.

    Args:
        times_ps: Click times
        detectors: Detector index per click
        duration: Session length in seconds
        bin_width: Bin width in seconds

    Returns:
        (bin start times in s, rates in counts/s with one column per detector)
    """
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    n_bins = max(1, int(np.ceil(duration / bin_width - 1e-9)))
    bin_ps = round(bin_width * PS_PER_S)
    index = np.clip(np.asarray(times_ps, dtype=np.int64) // bin_ps, 0, n_bins - 1)
    counts = np.zeros((n_bins, NUM_DETECTORS), dtype=np.int64)
    np.add.at(counts, (index, np.asarray(detectors, dtype=np.int64)), 1)
    return np.arange(n_bins) * bin_width, counts / bin_width

