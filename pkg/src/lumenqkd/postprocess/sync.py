"""Bayesian recovery of the transmitter-receiver clock offset and drift.

Synchronization uses only Bob's detection times and detectors plus Alice's
public basis/intensity announcements. It runs in two stages:

1. Drift and sub-slot phase. Detection times are folded modulo the slot
   period over a drift grid; the correct drift concentrates the folded
   phases (Rayleigh power). The grid is refined coarse-to-fine while the
   folded time span grows tenfold per level.
2. Slot shift. With drift and phase fixed every detection falls on an
   integer grid position. Each detection's log-likelihood ratio under
   every announced class is correlated against the announcement sequence
   with FFTs, giving the log posterior of every integer slot shift. A
   null hypothesis (detections unrelated to the announcements) competes
   with the shifts; confidence is the posterior mass within one slot of
   the best shift.
"""

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import fft
from scipy.special import logsumexp

from lumenqkd.config import SessionConfig
from lumenqkd.model import LEGAL_CLASSES, STATE_ORDER, IntensityClass, PhotonStatistics
from lumenqkd.postprocess.announcements import (
    ANNOUNCED_CLASSES,
    NUM_ANNOUNCED_CLASSES,
    PublicAnnouncement,
)
from lumenqkd.receiver import NUM_DETECTORS
from lumenqkd.transmitter.selection import sending_probability_array
from lumenqkd.transmitter.timeline import grid_to_slot, slot_grid_index

logger = logging.getLogger(__name__)

# Category used for grid positions with no transmitted slot (halts, outside the record).
NO_SLOT = NUM_ANNOUNCED_CLASSES
_PROBABILITY_FLOOR = 1e-9


class SyncSettings(BaseModel):
    """Tuning of the synchronization search."""

    model_config = ConfigDict(frozen=True)

    min_detections: int = Field(default=10_000, ge=1)
    confidence_threshold: float = Field(default=0.95, gt=0, le=1)
    drift_range: float = Field(default=50e-6, ge=0, description="Drift prior half-width")
    max_events: int = Field(default=200_000, ge=100)
    max_window_slots: int = Field(default=1 << 20, ge=1024)
    fold_min_events: int = Field(default=2_000, ge=10)
    null_prior: float = Field(default=0.5, gt=0, lt=1)
    neighborhood: int = Field(default=1, ge=0, description="Slots either side of the MAP")
    offset_prior: tuple[float, float] | None = Field(
        default=None, description="Allowed offset range in s (wrapped)"
    )
    arrival_centroid_ps: float | None = Field(
        default=None, description="Mean arrival time within a slot; pulse centre when None"
    )


@dataclass
class SyncResult:
    """Outcome of clock synchronization.

    Attributes:
        offset: Recovered clock offset in s, wrapped to half a rollover
        drift: Recovered relative clock-rate drift
        confidence: Posterior mass within one slot of the MAP shift
        accepted: True iff confidence reaches the acceptance threshold
        slot_shift: Grid shift between Bob's folded time base and Alice's slots
        phase_ps: Folded arrival phase within the slot period
        n_events: Detections used in the shift search
        reason: Why the result was rejected, if it was
    """

    offset: float
    drift: float
    confidence: float
    accepted: bool
    slot_shift: int = 0
    phase_ps: float = 0.0
    n_events: int = 0
    reason: str | None = None

    def to_dict(self) -> dict[str, object]:
        return {
            "offset": self.offset,
            "drift": self.drift,
            "confidence": self.confidence,
            "accepted": self.accepted,
            "slot_shift": self.slot_shift,
            "phase_ps": self.phase_ps,
            "n_events": self.n_events,
            "reason": self.reason,
        }


def _click_probability(mu: float, transmission: float, statistics: PhotonStatistics) -> float:
    """Probability that at least one of the photons reaching a detector clicks."""
    x = mu * transmission
    if statistics is PhotonStatistics.THERMAL:
        return x / (1.0 + x)
    return -np.expm1(-x)


def click_log_ratios(config: SessionConfig) -> np.ndarray:
    """Per-detector log-likelihood ratios of a click under each announced class.

    Entry [d, c] is log(P(click on d | class c) / P(click on d)) where the
    reference is the click probability averaged over the sending
    distribution. Column NO_SLOT covers grid positions without a slot.

    Returns:
        Array of shape (4, NUM_ANNOUNCED_CLASSES + 1)
    """
    probs = sending_probability_array(config.selection_thresholds)
    transmission = config.channel_transmissivity * config.detector_efficiency
    noise = (config.dark_rate + config.background_rate) * config.slot_period

    class_prob = np.zeros(NUM_ANNOUNCED_CLASSES)
    click = np.full((NUM_DETECTORS, NUM_ANNOUNCED_CLASSES + 1), noise)
    for c, (basis, intensity) in enumerate(ANNOUNCED_CLASSES):
        members = [
            (code, prep)
            for code, prep in enumerate(LEGAL_CLASSES)
            if prep.intensity is intensity and (basis is None or prep.state.basis is basis)
        ]
        weight = sum(probs[code] for code, _ in members)
        class_prob[c] = weight
        if intensity is IntensityClass.VACUUM or weight == 0:
            continue
        mu = config.mean_photon_number(intensity)
        for d, detector in enumerate(STATE_ORDER):
            p = 0.0
            for code, prep in members:
                eps = config.error_prob(prep.state)
                if detector.basis is prep.state.basis:
                    q = 0.5 * (1 - eps) if detector is prep.state else 0.5 * eps
                else:
                    q = 0.25
                p += probs[code] / weight * _click_probability(
                    mu, transmission * q, config.photon_statistics
                )
            click[d, c] = 1.0 - (1.0 - p) * (1.0 - noise)

    click = np.maximum(click, _PROBABILITY_FLOOR)
    mean_click = click[:, :NUM_ANNOUNCED_CLASSES] @ class_prob
    return np.log(click / mean_click[:, None])


def _fold_power(times: np.ndarray, drifts: np.ndarray, period_ps: float) -> np.ndarray:
    power = np.empty(drifts.size)
    for k, drift in enumerate(drifts):
        cycles = times / ((1.0 + drift) * period_ps)
        power[k] = np.abs(np.exp(2j * np.pi * np.mod(cycles, 1.0)).mean()) ** 2
    return power


def _subsample(values: np.ndarray, limit: int) -> np.ndarray:
    if values.size <= limit:
        return values
    return values[np.linspace(0, values.size - 1, limit).astype(np.int64)]


def estimate_drift_phase(
    times_ps: np.ndarray, period_ps: float, settings: SyncSettings
) -> tuple[float, float]:
    """Stage one: drift by coarse-to-fine epoch folding, then the arrival phase.

    The first grid spans the whole drift prior (+-drift_range, 50 ppm by
    default) in 200 steps over a short fold horizon. Each refinement folds ten
    times more of the record around the best drift with step
    period / (8 * horizon), so the final step keeps the folded phase within an
    eighth of a slot over the full record. The phase is a circular mean and
    is not quantised to the 78 ps delay grid.

    Offsets are not searched here. Stage two scores every integer slot shift
    that overlaps the announcement record, which covers the whole tag rollover
    at one-slot steps; shift, phase and drift together give the offset.

    Returns:
        (drift, phase in ps within [0, period))
    """
    times = np.asarray(times_ps, dtype=float)
    relative = times - times[0]
    span = max(float(relative[-1]), 1.0)

    drift_range = settings.drift_range
    if drift_range > 0:
        step = 2 * drift_range / 200
        horizon = period_ps / (8 * step)
        nth = min(settings.fold_min_events, relative.size) - 1
        horizon = min(max(horizon, float(relative[nth])), span)
        step = period_ps / (8 * horizon)
        n_grid = min(max(int(np.ceil(2 * drift_range / step)) // 2 * 2 + 1, 3), 50_001)
        grid = np.linspace(-drift_range, drift_range, n_grid)
        best = 0.0
        while True:
            events = _subsample(relative[relative <= horizon], settings.max_events)
            power = _fold_power(events, grid, period_ps)
            best = float(grid[np.argmax(power)])
            logger.debug(
                "Fold over %.3g s with %d events: drift %.3e (%d grid points)",
                horizon / 1e12,
                events.size,
                best,
                grid.size,
            )
            if horizon >= span:
                break
            old_step = grid[1] - grid[0] if grid.size > 1 else step
            horizon = min(horizon * 10, span)
            step = period_ps / (8 * horizon)
            half = int(np.ceil(2 * old_step / step))
            grid = best + step * np.arange(-half, half + 1)
        drift = best
    else:
        drift = 0.0

    events = _subsample(times, settings.max_events)
    cycles = events / ((1.0 + drift) * period_ps)
    mean_phase = np.angle(np.exp(2j * np.pi * np.mod(cycles, 1.0)).mean())
    phase = float(np.mod(mean_phase / (2 * np.pi), 1.0) * period_ps)
    return drift, phase


class _ShiftScorer:
    """Log-likelihood of integer slot shifts for a window of detections."""

    def __init__(
        self,
        grid_pos: np.ndarray,
        detectors: np.ndarray,
        classes: np.ndarray,
        log_ratios: np.ndarray,
        config: SessionConfig,
    ):
        self.base = int(grid_pos[0])
        self.x = grid_pos - self.base
        self.detectors = detectors
        self.classes = classes
        self.config = config
        self.n_slots = int(classes.size)
        self.n_grid = int(slot_grid_index(np.array([self.n_slots - 1]), config)[0]) + 1
        # Relative to the no-slot category, so positions outside the record add nothing.
        self.values = log_ratios - log_ratios[:, NO_SLOT][:, None]
        self.constant = float(log_ratios[detectors, NO_SLOT].sum())
        self.length = int(self.x[-1]) + 1

    def _values_at(self, grid: np.ndarray) -> np.ndarray:
        slots = grid_to_slot(grid, self.n_slots, self.config)
        categories = np.where(slots >= 0, self.classes[np.maximum(slots, 0)], NO_SLOT)
        return self.values[:, categories]

    def score(self, lag: int) -> float:
        """Direct evaluation for one lag (grid position = x + lag)."""
        grid = self.x + lag
        vals = self._values_at(grid)[self.detectors, np.arange(grid.size)]
        return self.constant + float(vals.sum())

    def scan(self, prior_mask):
        """Yield (first lag, scores) blocks covering every overlapping lag."""
        n_fft = fft.next_fast_len(max(2 * self.length, 1 << 16), real=True)
        block = n_fft - self.length + 1
        counts_fft = []
        for d in range(NUM_DETECTORS):
            counts = np.bincount(self.x[self.detectors == d], minlength=self.length)
            counts_fft.append(np.conj(fft.rfft(counts.astype(float), n_fft)))

        lag = -(self.length - 1)
        while lag <= self.n_grid - 1:
            grid = lag + np.arange(block + self.length - 1)
            segment = self._values_at(grid)
            spectrum = np.zeros(n_fft // 2 + 1, dtype=complex)
            for d in range(NUM_DETECTORS):
                spectrum += fft.rfft(segment[d], n_fft) * counts_fft[d]
            scores = fft.irfft(spectrum, n_fft)[:block] + self.constant
            lags = lag + np.arange(block)
            valid = lags <= self.n_grid - 1
            if prior_mask is not None:
                valid &= prior_mask(lags)
            yield lags[valid], scores[valid]
            lag += block


def _wrap(offset_ps: float, rollover_ps: int) -> float:
    return float(np.mod(offset_ps + rollover_ps / 2, rollover_ps) - rollover_ps / 2)


def _offset_ps(shift: np.ndarray | int, phase: float, drift: float, centroid: float, period: int):
    return (np.asarray(shift, dtype=float) * period + phase - centroid) * (1.0 + drift)


def recover_clock_offset(
    announcements: PublicAnnouncement,
    times_ps: np.ndarray,
    detectors: np.ndarray,
    config: SessionConfig,
    settings: SyncSettings | None = None,
) -> SyncResult:
    """Recover Bob's clock offset and drift relative to Alice.

    Args:
        announcements: Alice's public basis/intensity record, one entry per slot
        times_ps: Unwrapped detection times on Bob's clock, non-decreasing
        detectors: Detector index per detection
        config: Session configuration (clock, source and detector model)
        settings: Search settings; derived from the config when None

    Returns:
        SyncResult; ``accepted`` is False when confidence is below the threshold
        or too few detections are available
    """
    settings = settings or config.sync_settings()
    times_ps = np.asarray(times_ps, dtype=np.int64)
    detectors = np.asarray(detectors, dtype=np.int64)
    period = config.slot_period_ps

    if times_ps.size < settings.min_detections or len(announcements) == 0:
        reason = f"{times_ps.size} detections, at least {settings.min_detections} required"
        logger.warning("Synchronization skipped: %s", reason)
        return SyncResult(
            offset=0.0, drift=0.0, confidence=0.0, accepted=False, n_events=0, reason=reason
        )

    drift, phase = estimate_drift_phase(times_ps, period, settings)
    grid_pos = np.rint((times_ps / (1.0 + drift) - phase) / period).astype(np.int64)

    in_window = (grid_pos - grid_pos[0]) < settings.max_window_slots
    window = np.flatnonzero(in_window)[: settings.max_events]
    scorer = _ShiftScorer(
        grid_pos[window],
        detectors[window],
        announcements.classes,
        click_log_ratios(config),
        config,
    )

    centroid = (
        settings.arrival_centroid_ps
        if settings.arrival_centroid_ps is not None
        else config.pulse_centroid_ps
    )
    rollover = config.rollover_ps

    prior_mask = None
    if settings.offset_prior is not None:
        lo, hi = (value * 1e12 for value in settings.offset_prior)

        def prior_mask(lags: np.ndarray) -> np.ndarray:
            offsets = _offset_ps(scorer.base - lags, phase, drift, centroid, period)
            wrapped = np.mod(offsets + rollover / 2, rollover) - rollover / 2
            return (wrapped >= lo) & (wrapped <= hi)

    best_lag, best_score = 0, -np.inf
    partial_lse: list[float] = []
    n_hypotheses = 0
    for lags, scores in scorer.scan(prior_mask):
        if scores.size == 0:
            continue
        n_hypotheses += scores.size
        partial_lse.append(float(logsumexp(scores)))
        k = int(np.argmax(scores))
        if scores[k] > best_score:
            best_lag, best_score = int(lags[k]), float(scores[k])

    if n_hypotheses == 0:
        return SyncResult(
            offset=0.0,
            drift=drift,
            confidence=0.0,
            accepted=False,
            phase_ps=phase,
            n_events=window.size,
            reason="no slot shift inside the offset prior",
        )

    log_shift_prior = np.log1p(-settings.null_prior) - np.log(n_hypotheses)
    log_total = np.logaddexp(
        float(logsumexp(partial_lse)) + log_shift_prior, np.log(settings.null_prior)
    )
    near = [
        scorer.score(best_lag + d)
        for d in range(-settings.neighborhood, settings.neighborhood + 1)
        if prior_mask is None or prior_mask(np.array([best_lag + d]))[0]
    ]
    confidence = float(np.exp(logsumexp(near) + log_shift_prior - log_total))
    confidence = min(confidence, 1.0)

    shift = scorer.base - best_lag
    offset = _wrap(float(_offset_ps(shift, phase, drift, centroid, period)), rollover) / 1e12
    accepted = confidence >= settings.confidence_threshold
    logger.info(
        "Sync: offset %.9f s, drift %.3e, confidence %.4f (%s)",
        offset,
        drift,
        confidence,
        "accepted" if accepted else "rejected",
    )
    return SyncResult(
        offset=offset,
        drift=drift,
        confidence=confidence,
        accepted=accepted,
        slot_shift=int(shift),
        phase_ps=phase,
        n_events=int(window.size),
        reason=None if accepted else f"confidence {confidence:.4f} below threshold",
    )


def assign_slots(
    times_ps: np.ndarray, result: SyncResult, config: SessionConfig, n_slots: int
) -> np.ndarray:
    """Map Bob's detection times to Alice's active-slot indices.

    Returns:
        Slot index per detection, -1 when it falls in a halt or outside the session
    """
    times_ps = np.asarray(times_ps, dtype=np.int64)
    grid = np.rint(
        (times_ps / (1.0 + result.drift) - result.phase_ps) / config.slot_period_ps
    ).astype(np.int64)
    return grid_to_slot(grid - result.slot_shift, n_slots, config)
