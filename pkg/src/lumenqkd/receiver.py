"""Receiver simulation: passive basis choice, four SPADs and the time tagger.

Detector and state indices follow the model module (H=0, V=1, L=2, R=3).
All times are integer picoseconds.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field

from lumenqkd.config import PS_PER_S
from lumenqkd.model import STATE_ORDER, Basis, PolarizationState

logger = logging.getLogger(__name__)

NUM_DETECTORS = 4
_NO_CLICK = np.iinfo(np.int64).min // 2


class DetectorParams(BaseModel):
    """Parameters shared by Bob's four single-photon detectors."""

    model_config = ConfigDict(frozen=True)

    efficiency: float = Field(default=0.65, ge=0, le=1)
    dark_rate: float = Field(default=250.0, ge=0, description="Dark counts/s")
    jitter_sigma: float = Field(default=170e-12, ge=0, description="Timing jitter sigma in s")
    dead_time: float = Field(default=50e-9, ge=0, description="Non-paralyzable dead time in s")
    # Informational: clicks are limited by dead_time alone.
    saturation_rate: float = Field(default=5e6, gt=0, description="Rated saturation in Hz")

    @property
    def dead_time_ps(self) -> int:
        return round(self.dead_time * PS_PER_S)

    @property
    def jitter_ps(self) -> float:
        return self.jitter_sigma * PS_PER_S

    @property
    def max_count_rate(self) -> float:
        """Rated ceiling on one detector's click rate, used for the saturation warning."""
        if self.dead_time == 0:
            return self.saturation_rate
        return min(self.saturation_rate, 1.0 / self.dead_time)


@dataclass(frozen=True)
class DetectionEvent:
    """One detector click.

    Attributes:
        detector: Detector that fired
        raw_tag: Counter value latched by the time tagger
        true_time_ps: Ground-truth click time, never written to public logs
    """

    detector: PolarizationState
    raw_tag: int
    true_time_ps: int


@dataclass(frozen=True, eq=False)
class ClickBatch:
    """Clicks from one block of arrivals, sorted by time.

    Attributes:
        times_ps: Click times
        detectors: Detector index per click
        source: Index of the originating arrival, -1 for dark or background counts
    """

    times_ps: np.ndarray
    detectors: np.ndarray
    source: np.ndarray

    def __len__(self) -> int:
        return int(self.times_ps.size)


def sort_photon(
    state: PolarizationState, rng: np.random.Generator, basis: Basis | None = None
) -> PolarizationState:
    """Route one photon through the passive basis-choice decoder.

    The beam splitter picks a basis 50/50 unless ``basis`` forces one. A
    photon prepared in the measured basis reaches its own detector; a
    photon from the other basis lands on either detector with equal odds.
    """
    state = PolarizationState(state)
    measured = Basis(basis) if basis is not None else (Basis.HV if rng.random() < 0.5 else Basis.LR)
    if state.basis is measured:
        return state
    pair = (PolarizationState.H, PolarizationState.V)
    if measured is Basis.LR:
        pair = (PolarizationState.L, PolarizationState.R)
    return pair[int(rng.random() < 0.5)]


def sort_photons(states: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorised sort_photon over state indices.

    Returns:
        Detector index for every photon
    """
    states = np.asarray(states, dtype=np.int8)
    measured = (rng.random(states.size) >= 0.5).astype(np.int8)
    coin = (rng.random(states.size) < 0.5).astype(np.int8)
    same_basis = (states // 2) == measured
    return np.where(same_basis, states, 2 * measured + coin).astype(np.int8)


@njit(cache=True)
def apply_dead_time(times_ps, detectors, dead_time_ps, last_click_ps):
    """Non-paralyzable dead time over time-ordered clicks.

    ``last_click_ps`` holds the last registered click per detector and is
    updated in place so consecutive blocks can be chained.

    Returns:
        Boolean mask of clicks that register
    """
    keep = np.zeros(times_ps.size, dtype=np.bool_)
    for i in range(times_ps.size):
        d = detectors[i]
        if times_ps[i] - last_click_ps[d] >= dead_time_ps:
            keep[i] = True
            last_click_ps[d] = times_ps[i]
    return keep


class DetectorBank:
    """Bob's four detectors with their dead-time state.

    The bank is stateful: each call continues from the last registered click
    of every detector, so arrivals must be fed in time order block by block.
    """

    def __init__(
        self,
        params: DetectorParams,
        tagger_tick_ps: int = 10_000,
        tagger_bits: int = 30,
    ):
        """Initialize the bank.

        Args:
            params: Detector parameters
            tagger_tick_ps: Time-tagger clock period
            tagger_bits: Width of the time-tag counter
        """
        self.params = params
        self.tagger_tick_ps = tagger_tick_ps
        self.tagger_bits = tagger_bits
        self._last_click = np.full(NUM_DETECTORS, _NO_CLICK, dtype=np.int64)

    def reset(self) -> None:
        self._last_click[:] = _NO_CLICK

    def detect(
        self, arrival_ps: int, detector: PolarizationState, rng: np.random.Generator
    ) -> DetectionEvent | None:
        """Register a single photon arrival.

        Returns:
            DetectionEvent, or None if the photon is missed or the detector is dead
        """
        if rng.random() >= self.params.efficiency:
            return None
        click = int(arrival_ps)
        if self.params.jitter_sigma > 0:
            click += int(np.rint(rng.normal(0.0, self.params.jitter_ps)))
        index = PolarizationState(detector).index
        if click - self._last_click[index] < self.params.dead_time_ps:
            return None
        self._last_click[index] = click
        tag = int(time_tags(np.array([click]), self.tagger_tick_ps, self.tagger_bits)[0])
        return DetectionEvent(detector=STATE_ORDER[index], raw_tag=tag, true_time_ps=click)

    def dark_counts(
        self, start_ps: int, end_ps: int, rng: np.random.Generator, extra_rate: float = 0.0
    ) -> tuple[np.ndarray, np.ndarray]:
        """Uniform dark (plus background) counts on every detector over [start, end)."""
        rate = self.params.dark_rate + extra_rate
        span = end_ps - start_ps
        if rate <= 0 or span <= 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8)
        counts = rng.poisson(rate * span / PS_PER_S, size=NUM_DETECTORS)
        times = rng.integers(start_ps, end_ps, size=int(counts.sum()), dtype=np.int64)
        detectors = np.repeat(np.arange(NUM_DETECTORS, dtype=np.int8), counts)
        return times, detectors

    def detect_arrivals(
        self,
        arrival_ps: np.ndarray,
        detectors: np.ndarray,
        rng: np.random.Generator,
        window: tuple[int, int] | None = None,
        background_rate: float = 0.0,
    ) -> ClickBatch:
        """Turn a block of photon arrivals into registered clicks.

        Each arrival clicks with the detector efficiency and is shifted by
        Gaussian jitter. Dark and background counts over ``window`` are mixed
        in before dead time is applied in time order.
        """
        arrival_ps = np.asarray(arrival_ps, dtype=np.int64)
        detectors = np.asarray(detectors, dtype=np.int8)
        detected = rng.random(arrival_ps.size) < self.params.efficiency
        source = np.flatnonzero(detected)
        times = arrival_ps[detected]
        if self.params.jitter_sigma > 0 and times.size:
            times = times + np.rint(rng.normal(0.0, self.params.jitter_ps, times.size)).astype(
                np.int64
            )
        dets = detectors[detected]

        if window is not None:
            dark_times, dark_dets = self.dark_counts(window[0], window[1], rng, background_rate)
            times = np.concatenate([times, dark_times])
            dets = np.concatenate([dets, dark_dets])
            source = np.concatenate([source, np.full(dark_times.size, -1, dtype=np.int64)])

        order = np.argsort(times, kind="stable")
        times, dets, source = times[order], dets[order], source[order]
        keep = apply_dead_time(times, dets, self.params.dead_time_ps, self._last_click)
        return ClickBatch(times_ps=times[keep], detectors=dets[keep], source=source[keep])


def time_tag(t: float, tagger_rate: float = 100e6, tagger_bits: int = 30) -> int:
    """Counter value latched at time ``t`` seconds: floor(t * rate) mod 2^bits.

    Raises:
        ValueError: If t is negative
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    tick_ps = round(PS_PER_S / tagger_rate)
    return int(time_tags(np.array([round(t * PS_PER_S)]), tick_ps, tagger_bits)[0])


def time_tags(times_ps: np.ndarray, tick_ps: int, bits: int) -> np.ndarray:
    """Vectorised time_tag on integer picosecond times (negative times wrap)."""
    times_ps = np.asarray(times_ps, dtype=np.int64)
    return np.mod(np.floor_divide(times_ps, tick_ps), np.int64(2) ** bits)
