"""Session timeline: active transmission intervals and data-save halts.

The transmitter runs for ``halt_interval`` seconds, stops for
``halt_duration`` seconds while its memory is saved, and repeats. Active
slots are numbered consecutively across intervals; the slot grid counts
every period of the 12.5 MHz clock including those inside halts, so grid
index x slot period is the slot start time in picoseconds.
"""

from dataclasses import dataclass, field

import numpy as np

from lumenqkd.config import PS_PER_S, SessionConfig


@dataclass(frozen=True)
class ActiveInterval:
    """A contiguous run of transmitted slots.

    Attributes:
        start_ps: Start time of the first slot
        end_ps: End of the interval (start of the following halt or session end)
        first_slot: Active-slot index of the first slot
        n_slots: Number of slots in the interval
    """

    start_ps: int
    end_ps: int
    first_slot: int
    n_slots: int

    @property
    def duration_ps(self) -> int:
        return self.end_ps - self.start_ps


@dataclass(frozen=True)
class SessionTimeline:
    """Layout of a session in time.

    Attributes:
        intervals: Active intervals in time order
        duration_ps: Total session duration
        gaps: Complete halts as (start_ps, end_ps)
        trailing_halt: Halt cut short by the end of the session, if any
    """

    intervals: list[ActiveInterval]
    duration_ps: int
    gaps: list[tuple[int, int]] = field(default_factory=list)
    trailing_halt: tuple[int, int] | None = None

    @property
    def total_slots(self) -> int:
        return sum(interval.n_slots for interval in self.intervals)

    @property
    def active_time_ps(self) -> int:
        return sum(interval.duration_ps for interval in self.intervals)

    @property
    def active_time_s(self) -> float:
        return self.active_time_ps / PS_PER_S

    @property
    def halt_time_ps(self) -> int:
        halted = sum(end - start for start, end in self.gaps)
        if self.trailing_halt is not None:
            halted += self.trailing_halt[1] - self.trailing_halt[0]
        return halted


def session_timeline(duration: float, config: SessionConfig) -> SessionTimeline:
    """Lay out the active intervals and halts of a session.

    Args:
        duration: Session length in seconds
        config: Session configuration

    Returns:
        SessionTimeline whose intervals and halts tile [0, duration)

    Raises:
        ValueError: If duration is not positive
    """
    if duration <= 0:
        raise ValueError("duration must be positive")

    duration_ps = round(duration * PS_PER_S)
    period = config.slot_period_ps
    interval_ps = config.slots_per_interval * period
    halt_ps = config.halt_slots * period

    intervals: list[ActiveInterval] = []
    gaps: list[tuple[int, int]] = []
    trailing: tuple[int, int] | None = None
    t = 0
    first_slot = 0
    while t < duration_ps:
        end = min(t + interval_ps, duration_ps)
        n_slots = (end - t) // period
        intervals.append(ActiveInterval(t, end, first_slot, n_slots))
        first_slot += n_slots
        if end >= duration_ps or halt_ps == 0:
            t = end
            continue
        halt_end = min(end + halt_ps, duration_ps)
        if halt_end - end < halt_ps:
            trailing = (end, halt_end)
        else:
            gaps.append((end, halt_end))
        t = halt_end

    return SessionTimeline(
        intervals=intervals, duration_ps=duration_ps, gaps=gaps, trailing_halt=trailing
    )


def slot_grid_index(slots: np.ndarray, config: SessionConfig) -> np.ndarray:
    """Map active-slot indices to positions on the uninterrupted clock grid."""
    slots = np.asarray(slots, dtype=np.int64)
    per_interval = config.slots_per_interval
    cycle = per_interval + config.halt_slots
    return (slots // per_interval) * cycle + slots % per_interval


def grid_to_slot(grid: np.ndarray, n_slots: int, config: SessionConfig) -> np.ndarray:
    """Map clock-grid positions back to active-slot indices.

    Positions inside a halt, before the session or past its last slot map to -1.
    """
    grid = np.asarray(grid, dtype=np.int64)
    per_interval = config.slots_per_interval
    cycle = per_interval + config.halt_slots
    within = grid % cycle
    slots = (grid // cycle) * per_interval + within
    valid = (grid >= 0) & (within < per_interval) & (slots < n_slots)
    return np.where(valid, slots, -1)


def slot_start_ps(slots: np.ndarray, config: SessionConfig) -> np.ndarray:
    """Start time in picoseconds of each active slot."""
    return slot_grid_index(slots, config) * config.slot_period_ps
