"""Configuration management for lumenqkd.

This module defines SessionConfig, the validated set of session parameters
shared by the simulator, post-processing and analysis, and loads it from
presets, YAML files and environment variables. All defaults are the
published constants of the transmitter/receiver system.
"""

from os import getenv
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from lumenqkd.exceptions import ConfigurationError
from lumenqkd.model import (
    IntensityClass,
    PhotonStatistics,
    PolarizationState,
    SideChannelAxis,
)
from lumenqkd.yaml_config import (
    ENV_MAPPING,
    load_yaml_config,
    locate_session_file,
    merge_config_settings,
    resolve_preset,
)

PS_PER_S = 10**12

# Inclusive byte ranges in state-code order: (R,S) (L,S) (H,S) (R,D) (L,D) (H,D) vacuum.
DEFAULT_THRESHOLDS: tuple[tuple[int, int], ...] = (
    (0, 50),
    (51, 101),
    (102, 179),
    (180, 193),
    (194, 207),
    (208, 228),
    (229, 255),
)


def _exact_ps(seconds: float, name: str) -> int:
    value = round(seconds * PS_PER_S)
    if value <= 0 or abs(value - seconds * PS_PER_S) > 1e-6 * max(1.0, value):
        raise ValueError(f"{name} must be a positive whole number of picoseconds")
    return value


class SessionConfig(BaseModel):
    """Configuration for a simulated or recorded QKD session.

    Times are given in seconds and converted to integer picoseconds by the
    *_ps properties; wavelengths are in nanometres.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    clock_rate: float = Field(default=12.5e6, description="Transmitter clock rate in Hz")
    optical_pulse_width: float = Field(default=10e-9, description="Optical pulse width in s")
    timing_step: float = Field(default=78e-12, description="PLL delay resolution in s")
    tagger_rate: float = Field(default=100e6, description="Receiver time-tag clock in Hz")
    tagger_bits: int = Field(default=30, description="Width of the time-tag counter")
    selection_thresholds: tuple[tuple[int, int], ...] = Field(
        default=DEFAULT_THRESHOLDS,
        description="Inclusive random-byte ranges per state code 0..6",
    )
    mu_signal: float = Field(default=1.0, description="Signal mean photon number")
    mu_decoy: float = Field(default=0.4, description="Decoy mean photon number")
    photon_statistics: PhotonStatistics = Field(
        default=PhotonStatistics.THERMAL, description="Photon-number distribution"
    )
    channel_transmissivity: float = Field(default=0.1, description="Channel transmissivity")
    polarization_error_prob: float = Field(
        default=0.0183, description="Residual polarization flip probability"
    )
    polarization_error_by_state: dict[PolarizationState, float] | None = Field(
        default=None, description="Per-state overrides of the flip probability"
    )
    background_rate: float = Field(default=0.0, description="Background counts/s per detector")
    detector_efficiency: float = Field(default=0.65, description="Detection efficiency")
    dark_rate: float = Field(default=250.0, description="Dark counts/s per detector")
    jitter_sigma: float = Field(default=170e-12, description="Timing jitter sigma in s")
    dead_time: float = Field(default=50e-9, description="Non-paralyzable dead time in s")
    saturation_rate: float = Field(
        default=5e6,
        description="Rated saturation in Hz; only reported and used for the count-rate warning",
    )
    halt_interval: float = Field(default=6.71, description="Active time between halts in s")
    halt_duration: float = Field(default=0.5, description="Data-save halt duration in s")
    rng_seed: int = Field(default=0, description="Seed for numpy.random.default_rng")
    clock_offset: float = Field(default=0.0, description="Simulated receiver clock offset in s")
    clock_drift: float = Field(default=0.0, description="Simulated relative clock drift")
    pns_attack: bool = Field(default=False, description="Drop single-photon wavepackets")
    eve_axis: SideChannelAxis = Field(
        default=SideChannelAxis.TEMPORAL, description="Side channel sampled by Eve"
    )
    record_eve: bool = Field(default=True, description="Record Eve's side-channel outcomes")
    temporal_bin_width: float = Field(default=20e-12, description="Temporal profile bin in s")
    spectral_bin_width: float = Field(default=0.3, description="Spectral profile bin in nm")
    filter_center: float = Field(default=656.3, description="Spectral filter centre in nm")
    filter_fwhm: float = Field(default=1.2, description="Spectral filter FWHM in nm")
    filter_shape: str = Field(default="gaussian", description="gaussian or top_hat")
    apply_filter: bool = Field(default=True, description="Filter the default spectra")
    sync_min_detections: int = Field(default=10_000, description="Minimum events for sync")
    sync_confidence: float = Field(default=0.95, description="Sync acceptance threshold")
    sync_drift_range: float = Field(default=50e-6, description="Drift prior half-width")
    sync_max_events: int = Field(default=200_000, description="Events used by the sync search")
    qber_limit: float = Field(default=0.11, description="QBER limit for a secure key")
    count_rate_bin: float = Field(default=0.1, description="Count-rate timeline bin in s")

    @field_validator(
        "clock_rate",
        "tagger_rate",
        "optical_pulse_width",
        "timing_step",
        "halt_interval",
        "saturation_rate",
        "temporal_bin_width",
        "spectral_bin_width",
        "filter_fwhm",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate that rates and widths are strictly positive."""
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("halt_duration", "dark_rate", "background_rate", "jitter_sigma", "dead_time")
    @classmethod
    def validate_nonnegative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator("channel_transmissivity", "detector_efficiency")
    @classmethod
    def validate_unit_interval(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("must lie in [0, 1]")
        return v

    @field_validator("polarization_error_prob")
    @classmethod
    def validate_error_prob(cls, v: float) -> float:
        if not 0.0 <= v <= 0.5:
            raise ValueError("must lie in [0, 0.5]")
        return v

    @field_validator("polarization_error_by_state")
    @classmethod
    def validate_error_overrides(
        cls, v: dict[PolarizationState, float] | None
    ) -> dict[PolarizationState, float] | None:
        if v is None:
            return v
        for state, prob in v.items():
            if not 0.0 <= prob <= 0.5:
                raise ValueError(f"error probability for {state.value} must lie in [0, 0.5]")
        return v

    @field_validator("filter_shape")
    @classmethod
    def validate_filter_shape(cls, v: str) -> str:
        if v not in ("gaussian", "top_hat"):
            raise ValueError("must be 'gaussian' or 'top_hat'")
        return v

    @field_validator("selection_thresholds")
    @classmethod
    def validate_thresholds(cls, v: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
        """Validate that the seven ranges partition 0..255 with no gaps or overlaps.

        Raises:
            ValueError: If the ranges do not form a partition
        """
        if len(v) != 7:
            raise ValueError("exactly 7 ranges are required, one per state code")
        covered: list[int] = []
        for lo, hi in v:
            if lo > hi:
                raise ValueError(f"range ({lo}, {hi}) is empty")
            covered.extend(range(lo, hi + 1))
        if sorted(covered) != list(range(256)):
            raise ValueError("ranges must cover 0..255 exactly once")
        return v

    @model_validator(mode="after")
    def validate_consistency(self) -> "SessionConfig":
        if not self.mu_signal > self.mu_decoy > 0:
            raise ValueError("mean photon numbers must satisfy mu_signal > mu_decoy > 0")
        _exact_ps(1.0 / self.clock_rate, "slot period")
        _exact_ps(1.0 / self.tagger_rate, "tagger tick")
        _exact_ps(self.timing_step, "timing_step")
        if not 0.0 < self.sync_confidence <= 1.0:
            raise ValueError("sync_confidence must lie in (0, 1]")
        if self.tagger_bits < 1:
            raise ValueError("tagger_bits must be at least 1")
        return self

    @property
    def slot_period(self) -> float:
        return 1.0 / self.clock_rate

    @property
    def slot_period_ps(self) -> int:
        return _exact_ps(1.0 / self.clock_rate, "slot period")

    @property
    def tagger_tick_ps(self) -> int:
        return _exact_ps(1.0 / self.tagger_rate, "tagger tick")

    @property
    def rollover_ps(self) -> int:
        return self.tagger_tick_ps * 2**self.tagger_bits

    @property
    def timing_step_ps(self) -> int:
        return _exact_ps(self.timing_step, "timing_step")

    @property
    def slots_per_interval(self) -> int:
        """Number of slots transmitted between two data-save halts."""
        return round(self.halt_interval * PS_PER_S) // self.slot_period_ps

    @property
    def halt_slots(self) -> int:
        """Length of one halt in slot periods."""
        return round(self.halt_duration * PS_PER_S) // self.slot_period_ps

    @property
    def pulse_centroid_ps(self) -> int:
        """Nominal centre of the optical pulse within its slot."""
        return round(self.optical_pulse_width * PS_PER_S / 2)

    def mean_photon_number(self, intensity: IntensityClass) -> float:
        """Return the mean photon number of an intensity class."""
        intensity = IntensityClass(intensity)
        if intensity is IntensityClass.SIGNAL:
            return self.mu_signal
        if intensity is IntensityClass.DECOY:
            return self.mu_decoy
        return 0.0

    def error_prob(self, state: PolarizationState) -> float:
        """Return the polarization flip probability for a transmitted state."""
        if self.polarization_error_by_state and state in self.polarization_error_by_state:
            return self.polarization_error_by_state[state]
        return self.polarization_error_prob

    def channel_params(self):
        """Create the ChannelParams for this session.

        Returns:
            ChannelParams carrying transmissivity, error and background settings
        """
        from lumenqkd.channel import ChannelParams

        return ChannelParams(
            transmissivity=self.channel_transmissivity,
            polarization_error_prob=self.polarization_error_prob,
            polarization_error_by_state=self.polarization_error_by_state,
            background_rate=self.background_rate,
            drop_single_photons=self.pns_attack,
        )

    def detector_params(self):
        """Create the DetectorParams shared by Bob's four detectors."""
        from lumenqkd.receiver import DetectorParams

        return DetectorParams(
            efficiency=self.detector_efficiency,
            dark_rate=self.dark_rate,
            jitter_sigma=self.jitter_sigma,
            dead_time=self.dead_time,
            saturation_rate=self.saturation_rate,
        )

    def filter_spec(self):
        """Create the FilterSpec of the transmitter/receiver band-pass filter."""
        from lumenqkd.transmitter.filters import FilterShape, FilterSpec

        return FilterSpec(
            center=self.filter_center,
            fwhm=self.filter_fwhm,
            shape=FilterShape(self.filter_shape),
        )

    def sync_settings(self):
        """Create the SyncSettings for clock recovery."""
        from lumenqkd.postprocess.sync import SyncSettings

        return SyncSettings(
            min_detections=self.sync_min_detections,
            confidence_threshold=self.sync_confidence,
            drift_range=self.sync_drift_range,
            max_events=self.sync_max_events,
        )

    @classmethod
    def from_env(cls, path: str | Path | None = None, **overrides: Any) -> "SessionConfig":
        """Create configuration from a preset or YAML file plus environment variables.

        Loads a .env file if present, resolves ``path`` as a preset name or
        YAML file (falling back to locate_session_file), merges with priority
        overrides > env vars > YAML/preset > defaults.

        Args:
            path: Preset name, YAML path, or None to search the working directory
            **overrides: Explicit field values, e.g. from command-line flags

        Returns:
            Validated SessionConfig

        Raises:
            ConfigurationError: If the file cannot be read or a key/value is invalid
        """
        load_dotenv()

        preset: dict[str, Any] | None = None
        yaml_dict: dict[str, Any] | None = None
        if path is not None and Path(path).suffix not in (".yaml", ".yml"):
            preset = resolve_preset(str(path))
        else:
            yaml_path = Path(path) if path is not None else locate_session_file()
            if yaml_path is not None:
                yaml_dict = load_yaml_config(yaml_path)
                if yaml_dict is None:
                    raise ConfigurationError(f"Could not read config file '{yaml_path}'")

        env_vars = {name: getenv(name) for name in ENV_MAPPING}
        merged = merge_config_settings(yaml_dict, env_vars, preset)
        merged.update({k: v for k, v in overrides.items() if v is not None})

        try:
            return cls(**merged)
        except ValidationError as e:
            raise ConfigurationError(_describe_validation_error(e)) from e


def _describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        key = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{key}: {item['msg']}")
    return "Invalid configuration: " + "; ".join(parts)


def get_config(path: str | Path | None = None) -> SessionConfig:
    """Get the session configuration.

    Convenience function to load configuration from the environment.

    Raises:
        ConfigurationError: If any setting is invalid
    """
    return SessionConfig.from_env(path)
