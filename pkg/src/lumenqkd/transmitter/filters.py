"""Narrow-band spectral filtering of source spectra."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from lumenqkd.exceptions import ProfileError
from lumenqkd.model import SideChannelAxis
from lumenqkd.transmitter.profiles import SourceProfile


class FilterShape(str, Enum):
    """Transmission shape of the band-pass filter."""

    GAUSSIAN = "gaussian"
    TOP_HAT = "top_hat"


class FilterSpec(BaseModel):
    """Band-pass filter description, wavelengths in nm."""

    model_config = ConfigDict(frozen=True)

    center: float = Field(default=656.3, description="Centre wavelength in nm")
    fwhm: float = Field(default=1.2, gt=0, description="Full width at half maximum in nm")
    shape: FilterShape = Field(default=FilterShape.GAUSSIAN)
    peak_transmission: float = Field(default=1.0, ge=0, le=1)

    def transmission(self, wavelength: np.ndarray) -> np.ndarray:
        """Transmission in [0, 1] at each wavelength."""
        wavelength = np.asarray(wavelength, dtype=float)
        if self.shape is FilterShape.TOP_HAT:
            inside = np.abs(wavelength - self.center) <= self.fwhm / 2
            return np.where(inside, self.peak_transmission, 0.0)
        sigma = self.fwhm / (2 * np.sqrt(2 * np.log(2)))
        return self.peak_transmission * np.exp(-0.5 * ((wavelength - self.center) / sigma) ** 2)


@dataclass(frozen=True)
class FilterResult:
    """Filtered profile and the fraction of light the filter passed.

    Attributes:
        profile: Renormalised filtered profile; counts scaled by transmission
        transmitted_fraction: Sum over bins of pdf x transmission
    """

    profile: SourceProfile
    transmitted_fraction: float


def apply_spectral_filter(profile: SourceProfile, spec: FilterSpec) -> FilterResult:
    """Pass a spectral profile through a band-pass filter.

    Each bin is weighted by the transmission at its centre and the result
    renormalised. Raw counts are scaled by the same transmission so the
    filtered histogram keeps its counting statistics.

    Raises:
        ProfileError: If the profile is not spectral or the filter passes nothing
    """
    if profile.axis is not SideChannelAxis.SPECTRAL:
        raise ProfileError("spectral filtering needs a spectral profile")
    transmission = spec.transmission(profile.bin_centers)
    passed = profile.pdf * transmission
    fraction = float(passed.sum())
    if fraction <= 0.0:
        raise ProfileError(
            f"filter at {spec.center} nm does not overlap the spectrum of {profile.label}"
        )
    filtered = SourceProfile(
        state_code=profile.state_code,
        axis=profile.axis,
        bin_centers=profile.bin_centers,
        counts=profile.counts * transmission,
        exact=profile.exact,
    )
    return FilterResult(profile=filtered, transmitted_fraction=fraction)
