"""Per-state side-channel profiles.

A SourceProfile is the measured (or synthesised) histogram of one
preparation class along one measurement axis: photon arrival time in
picoseconds or wavelength in nanometres. It houses p(E_j | A_i) together
with the raw counts that set its counting uncertainty.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lumenqkd.exceptions import ProfileError
from lumenqkd.model import LEGAL_CLASSES, SideChannelAxis

PROFILE_HEADER = ["bin_center", "counts"]


@dataclass(frozen=True, eq=False)
class SourceProfile:
    """Histogram of one preparation class along one axis.

    Attributes:
        state_code: State code 0..6 the profile describes
        axis: Spectral (bin centres in nm) or temporal (bin centres in ps)
        bin_centers: Uniformly spaced bin centres
        counts: Non-negative raw counts per bin
        exact: True if the histogram is noise free (counts treated as infinite)
    """

    state_code: int
    axis: SideChannelAxis
    bin_centers: np.ndarray
    counts: np.ndarray
    exact: bool = False
    pdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        centers = np.asarray(self.bin_centers, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        if centers.ndim != 1 or centers.shape != counts.shape or centers.size == 0:
            raise ProfileError("bin_centers and counts must be equal-length 1-D arrays")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ProfileError("profile counts must be finite and non-negative")
        total = counts.sum()
        if total <= 0:
            raise ProfileError("profile has no counts")
        if centers.size > 1:
            widths = np.diff(centers)
            if np.any(widths <= 0) or not np.allclose(widths, widths[0], rtol=1e-6, atol=0):
                raise ProfileError("profile bins must be increasing and uniformly spaced")
        object.__setattr__(self, "bin_centers", centers)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "pdf", counts / total)

    @property
    def bin_width(self) -> float:
        if self.bin_centers.size == 1:
            return 1.0
        return float(self.bin_centers[1] - self.bin_centers[0])

    @property
    def total_counts(self) -> float:
        return float(self.counts.sum())

    @property
    def sigma(self) -> np.ndarray:
        """Per-bin standard error on the probability scale, sqrt(N_i) / N_total."""
        if self.exact:
            return np.zeros_like(self.pdf)
        return np.sqrt(self.counts) / self.total_counts

    @property
    def label(self) -> str:
        return LEGAL_CLASSES[self.state_code].label

    def same_binning(self, other: "SourceProfile") -> bool:
        return self.bin_centers.shape == other.bin_centers.shape and np.allclose(
            self.bin_centers, other.bin_centers, rtol=0, atol=1e-9 * max(1.0, abs(self.bin_width))
        )

    def with_pdf(self, pdf: np.ndarray) -> "SourceProfile":
        """Return a profile on the same bins carrying ``pdf`` at the same total counts."""
        return SourceProfile(
            state_code=self.state_code,
            axis=self.axis,
            bin_centers=self.bin_centers,
            counts=np.asarray(pdf, dtype=float) * self.total_counts,
            exact=self.exact,
        )

    @classmethod
    def from_pdf(
        cls,
        state_code: int,
        axis: SideChannelAxis,
        bin_centers: np.ndarray,
        pdf: np.ndarray,
        total_counts: float | None = None,
    ) -> "SourceProfile":
        """Build a profile from probabilities; ``total_counts=None`` marks it exact."""
        pdf = np.asarray(pdf, dtype=float)
        scale = 1.0 if total_counts is None else float(total_counts)
        return cls(
            state_code=state_code,
            axis=SideChannelAxis(axis),
            bin_centers=np.asarray(bin_centers, dtype=float),
            counts=pdf / pdf.sum() * scale,
            exact=total_counts is None,
        )


SideChannelProfile = SourceProfile


def load_profile_csv(path: str | Path, state_code: int, axis: SideChannelAxis) -> SourceProfile:
    """Read a ``bin_center,counts`` histogram file.

    Lines starting with '#' are ignored.

    Raises:
        ProfileError: If the header is wrong or the file holds no data
    """
    path = Path(path)
    try:
        with open(path, newline="") as f:
            rows = [row for row in csv.reader(f) if row and not row[0].startswith("#")]
    except OSError as e:
        raise ProfileError(f"Cannot read profile '{path}': {e}") from e

    if not rows or [c.strip() for c in rows[0]] != PROFILE_HEADER:
        raise ProfileError(f"Profile '{path}' must start with header 'bin_center,counts'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError as e:
        raise ProfileError(f"Profile '{path}' has a malformed row: {e}") from e
    if data.size == 0:
        raise ProfileError(f"Profile '{path}' has no rows")
    return SourceProfile(
        state_code=state_code, axis=SideChannelAxis(axis), bin_centers=data[:, 0], counts=data[:, 1]
    )


def write_profile_csv(profile: SourceProfile, path: str | Path, run_id: str | None = None) -> None:
    """Write a profile as ``bin_center,counts``."""
    with open(path, "w", newline="") as f:
        if run_id:
            f.write(f"# run: {run_id}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PROFILE_HEADER)
        for center, count in zip(profile.bin_centers, profile.counts, strict=True):
            writer.writerow([repr(float(center)), repr(float(count))])


def gaussian_spectrum(
    state_code: int,
    peak: float,
    fwhm: float,
    bin_width: float,
    window: tuple[float, float],
    total_counts: float | None = None,
) -> SourceProfile:
    """Gaussian emission spectrum sampled at bin centres (nm)."""
    centers = np.arange(window[0], window[1] + bin_width / 2, bin_width)
    sigma = fwhm / (2 * np.sqrt(2 * np.log(2)))
    pdf = np.exp(-0.5 * ((centers - peak) / sigma) ** 2)
    return SourceProfile.from_pdf(state_code, SideChannelAxis.SPECTRAL, centers, pdf, total_counts)


def pulse_waveform(
    state_code: int,
    start_ps: float,
    width_ps: float,
    rise_ps: float,
    fall_ps: float,
    bin_width_ps: float,
    span_ps: float,
    total_counts: float | None = None,
) -> SourceProfile:
    """Optical pulse with exponential rise and fall edges (ps bin centres)."""
    centers = np.arange(bin_width_ps / 2, span_ps, bin_width_ps)
    end_ps = start_ps + width_ps
    rise = 1.0 - np.exp(-np.clip(centers - start_ps, 0, None) / rise_ps)
    shape = np.where(centers < start_ps, 0.0, rise)
    after = centers > end_ps
    level_at_end = 1.0 - np.exp(-width_ps / rise_ps)
    shape[after] = level_at_end * np.exp(-(centers[after] - end_ps) / fall_ps)
    return SourceProfile.from_pdf(
        state_code, SideChannelAxis.TEMPORAL, centers, shape, total_counts
    )


def default_profiles(config) -> dict[SideChannelAxis, dict[int, SourceProfile]]:
    """Synthesise RC-LED-like profiles for the six non-vacuum classes.

    Spectra are ~7 nm FWHM Gaussians with peaks spread over ~2 nm and a
    0.4 nm red shift for the lower-current decoy drive; temporal pulses
    last ``optical_pulse_width`` with slower edges for decoys. Spectra are
    passed through the configured band-pass filter when ``apply_filter``.

    Args:
        config: SessionConfig

    Returns:
        Mapping axis → {state code: profile}
    """
    from lumenqkd.transmitter.filters import apply_spectral_filter

    peak_offsets = {0: -0.9, 1: 0.2, 2: 1.0}  # per LED, indexed by code % 3
    spectral: dict[int, SourceProfile] = {}
    temporal: dict[int, SourceProfile] = {}
    bin_ps = config.temporal_bin_width * 1e12
    width_ps = config.optical_pulse_width * 1e12
    span_ps = width_ps + 6000.0
    window = (config.filter_center - 15.0, config.filter_center + 15.0)

    for code in range(6):
        is_decoy = code >= 3
        peak = config.filter_center + peak_offsets[code % 3] + (0.4 if is_decoy else 0.0)
        spectrum = gaussian_spectrum(code, peak, 7.0, config.spectral_bin_width, window)
        if config.apply_filter:
            spectrum = apply_spectral_filter(spectrum, config.filter_spec()).profile
        spectral[code] = spectrum
        temporal[code] = pulse_waveform(
            code,
            start_ps=500.0,
            width_ps=width_ps,
            rise_ps=350.0 if is_decoy else 300.0,
            fall_ps=600.0 if is_decoy else 500.0,
            bin_width_ps=bin_ps,
            span_ps=span_ps,
        )
    return {SideChannelAxis.SPECTRAL: spectral, SideChannelAxis.TEMPORAL: temporal}
