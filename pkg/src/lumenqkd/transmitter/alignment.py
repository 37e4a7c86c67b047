"""Temporal alignment of per-state pulse profiles.

The transmitter can move each LED's leading edge and change its pulse
width in whole PLL steps. Alignment searches those integer steps so every
profile matches a reference profile as closely as possible, measured by
the L1 distance between the binned pdfs.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.exceptions import ProfileError
from lumenqkd.model import SideChannelAxis
from lumenqkd.transmitter.profiles import SourceProfile

logger = logging.getLogger(__name__)

DEFAULT_STEP_PS = 78.0


@dataclass(frozen=True)
class TimingAdjustment:
    """Leading-edge offset and width change of one state, in PLL steps.

    Attributes:
        offset_steps: Shift of the pulse; positive delays it
        width_steps: Change of the pulse FWHM; positive widens it
    """

    offset_steps: int = 0
    width_steps: int = 0

    def offset_ps(self, step_ps: float = DEFAULT_STEP_PS) -> float:
        return self.offset_steps * step_ps

    @property
    def is_zero(self) -> bool:
        return self.offset_steps == 0 and self.width_steps == 0


@dataclass
class AlignmentResult:
    """Outcome of align_temporal_profiles.

    Attributes:
        adjustments: One adjustment per input profile; the reference gets zeros
        l1_history: Summed L1 distance to the reference, before the first
            iteration and after each completed iteration
        reference_index: Index of the reference profile
    """

    adjustments: list[TimingAdjustment]
    l1_history: list[float] = field(default_factory=list)
    reference_index: int = 0

    @property
    def iterations(self) -> int:
        return len(self.l1_history) - 1


def _fwhm(profile: SourceProfile) -> float:
    above = np.flatnonzero(profile.pdf >= profile.pdf.max() / 2)
    return float((above[-1] - above[0] + 1) * profile.bin_width)


def _mode(profile: SourceProfile) -> float:
    return float(profile.bin_centers[np.argmax(profile.pdf)])


def _shifted_pdf(
    profile: SourceProfile, shift_ps: float, width_ps: float
) -> np.ndarray | None:
    """Resample the profile after a shift and a stretch about its mode.

    The pdf is treated as piecewise constant, so its CDF is piecewise linear
    over the bin edges and can be evaluated at any mapped coordinate.
    Returns None when the adjusted pulse would have non-positive width or
    no mass left inside the window.
    """
    width = profile.bin_width
    edges = np.concatenate(
        [profile.bin_centers - width / 2, [profile.bin_centers[-1] + width / 2]]
    )
    cdf = np.concatenate([[0.0], np.cumsum(profile.pdf)])

    fwhm = _fwhm(profile)
    if fwhm + width_ps <= 0:
        return None
    stretch = (fwhm + width_ps) / fwhm
    mode = _mode(profile)

    source_edges = mode + (edges - shift_ps - mode) / stretch
    new_cdf = np.interp(source_edges, edges, cdf, left=0.0, right=1.0)
    pdf = np.diff(new_cdf)
    total = pdf.sum()
    if total <= 0:
        return None
    return pdf / total


def adjust_profile(
    profile: SourceProfile, adjustment: TimingAdjustment, step_ps: float = DEFAULT_STEP_PS
) -> SourceProfile:
    """Apply a timing adjustment to a temporal profile.

    Args:
        profile: Temporal profile to move
        adjustment: Integer-step offset and width change
        step_ps: PLL step in picoseconds

    Returns:
        Profile on the same bins with the same total counts

    Raises:
        ProfileError: If the profile is not temporal or the adjustment leaves no mass
    """
    if profile.axis is not SideChannelAxis.TEMPORAL:
        raise ProfileError("timing adjustments apply to temporal profiles only")
    if adjustment.is_zero:
        return profile
    pdf = _shifted_pdf(profile, adjustment.offset_steps * step_ps, adjustment.width_steps * step_ps)
    if pdf is None:
        raise ProfileError(f"adjustment {adjustment} moves {profile.label} out of its window")
    return profile.with_pdf(pdf)


def _l1(pdf: np.ndarray | None, reference: np.ndarray) -> float:
    if pdf is None:
        return float("inf")
    return float(np.abs(pdf - reference).sum())


def _best_step(
    candidates: range, distance, current: int, current_distance: float
) -> tuple[int, float]:
    """Pick the candidate with the smallest distance, smallest magnitude on ties.

    The current value is kept unless another candidate is strictly better.
    """
    best, best_distance = current, current_distance
    for step in sorted(candidates, key=lambda s: (abs(s), s)):
        d = distance(step)
        if d < best_distance - 1e-15:
            best, best_distance = step, d
    return best, best_distance


def align_temporal_profiles(
    profiles: list[SourceProfile],
    step_ps: float = DEFAULT_STEP_PS,
    max_iters: int = 5,
    reference_index: int = 0,
    max_offset_steps: int = 128,
    max_width_steps: int = 8,
) -> AlignmentResult:
    """Align temporal profiles to a reference by integer-step coordinate descent.

    Each iteration first searches the offset of every non-reference profile
    with its width fixed, then its width with the offset fixed. A move is
    only taken if it strictly lowers that profile's L1 distance, so the
    summed distance never increases between iterations. Among equally good
    offsets the one with the smallest magnitude wins.

    Args:
        profiles: At least two temporal profiles on a common binning
        step_ps: PLL step in picoseconds
        max_iters: Number of coordinate-descent sweeps
        reference_index: Profile kept fixed
        max_offset_steps: Offset search range in steps either side of zero
        max_width_steps: Width search range in steps either side of zero

    Returns:
        AlignmentResult with one TimingAdjustment per profile

    Raises:
        ProfileError: On fewer than two profiles or mismatched binning
    """
    if len(profiles) < 2:
        raise ProfileError("alignment needs at least two profiles")
    if not 0 <= reference_index < len(profiles):
        raise ProfileError(f"reference index {reference_index} out of range")
    reference = profiles[reference_index]
    for profile in profiles:
        if profile.axis is not SideChannelAxis.TEMPORAL:
            raise ProfileError("alignment needs temporal profiles")
        if not reference.same_binning(profile):
            raise ProfileError("profiles must share a common binning to be aligned")

    offsets = [0] * len(profiles)
    widths = [0] * len(profiles)
    distances = [_l1(p.pdf, reference.pdf) for p in profiles]
    history = [float(sum(distances))]

    for iteration in range(max_iters):
        for i, profile in enumerate(profiles):
            if i == reference_index:
                continue

            def offset_distance(step: int, i=i, profile=profile) -> float:
                pdf = _shifted_pdf(profile, step * step_ps, widths[i] * step_ps)
                return _l1(pdf, reference.pdf)

            offsets[i], distances[i] = _best_step(
                range(-max_offset_steps, max_offset_steps + 1),
                offset_distance,
                offsets[i],
                distances[i],
            )

            def width_distance(step: int, i=i, profile=profile) -> float:
                pdf = _shifted_pdf(profile, offsets[i] * step_ps, step * step_ps)
                return _l1(pdf, reference.pdf)

            widths[i], distances[i] = _best_step(
                range(-max_width_steps, max_width_steps + 1),
                width_distance,
                widths[i],
                distances[i],
            )

        history.append(float(sum(distances)))
        logger.debug("Alignment sweep %d: summed L1 %.6f", iteration + 1, history[-1])
        if history[-1] == history[-2]:
            break

    adjustments = [TimingAdjustment(o, w) for o, w in zip(offsets, widths, strict=True)]
    return AlignmentResult(
        adjustments=adjustments, l1_history=history, reference_index=reference_index
    )
