"""Reconstruction of absolute receiver time from rolled-over time tags."""

import logging
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.config import PS_PER_S
from lumenqkd.exceptions import TagAmbiguityError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class UnwrapResult:
    """Unwrapped tag times.

    Attributes:
        times_ps: Monotone absolute times in picoseconds
        rollovers: Number of counter rollovers crossed
        segments: (start, stop) index ranges of unambiguous segments
        ambiguous: Indices of events preceded by a suspiciously long gap
    """

    times_ps: np.ndarray
    rollovers: int
    segments: list[tuple[int, int]] = field(default_factory=list)
    ambiguous: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def times_s(self) -> np.ndarray:
        return self.times_ps / PS_PER_S

    @property
    def is_ambiguous(self) -> bool:
        return self.ambiguous.size > 0


def unwrap_tags(
    tags: np.ndarray,
    tick_ps: int = 10_000,
    bits: int = 30,
    max_gap_ps: int | None = None,
    strict: bool = False,
) -> UnwrapResult:
    """Unwrap raw counter values into absolute times.

    Every decrease of the raw tag adds one rollover period. A true gap of a
    full rollover or more is invisible in the tags, so any unwrapped gap
    longer than ``max_gap_ps`` (half a rollover by default) is flagged and
    starts a new segment.

    Args:
        tags: Raw tags in arrival order
        tick_ps: Tagger clock period
        bits: Counter width
        max_gap_ps: Longest gap trusted between consecutive events
        strict: Raise instead of flagging ambiguous gaps

    Returns:
        UnwrapResult

    Raises:
        TagAmbiguityError: In strict mode when any gap is ambiguous
        ValueError: If a tag lies outside the counter range
    """
    tags = np.asarray(tags, dtype=np.int64)
    modulus = np.int64(2) ** bits
    if tags.size and (tags.min() < 0 or tags.max() >= modulus):
        raise ValueError(f"tags must lie in [0, 2^{bits})")
    rollover_ps = int(modulus) * tick_ps
    if max_gap_ps is None:
        max_gap_ps = rollover_ps // 2

    wraps = np.zeros(tags.size, dtype=np.int64)
    wraps[1:] = np.cumsum(np.diff(tags) < 0)
    times = tags * tick_ps + wraps * rollover_ps

    gaps = np.diff(times)
    ambiguous = np.flatnonzero(gaps > max_gap_ps) + 1
    if ambiguous.size:
        if strict:
            raise TagAmbiguityError(
                f"{ambiguous.size} gap(s) longer than {max_gap_ps / PS_PER_S:.3f} s between tags"
            )
        logger.warning("Splitting tag stream at %d ambiguous gap(s)", ambiguous.size)

    bounds = [0, *ambiguous.tolist(), int(tags.size)]
    segments = [(a, b) for a, b in zip(bounds[:-1], bounds[1:], strict=True) if b > a]
    return UnwrapResult(
        times_ps=times,
        rollovers=int(wraps[-1]) if wraps.size else 0,
        segments=segments,
        ambiguous=ambiguous,
    )
