"""YAML configuration loading for lumenqkd.

This module handles finding, loading, and merging flat key-value YAML
configuration files, named presets and environment variables into the
keyword arguments for SessionConfig.
"""

import os
from pathlib import Path
from typing import Any

import yaml

from lumenqkd.exceptions import ConfigurationError

# Keys recognised in YAML files and presets; mirrors SessionConfig fields.
CONFIG_KEYS: frozenset[str] = frozenset(
    {
        "clock_rate",
        "optical_pulse_width",
        "timing_step",
        "tagger_rate",
        "tagger_bits",
        "selection_thresholds",
        "mu_signal",
        "mu_decoy",
        "photon_statistics",
        "channel_transmissivity",
        "polarization_error_prob",
        "polarization_error_by_state",
        "background_rate",
        "detector_efficiency",
        "dark_rate",
        "jitter_sigma",
        "dead_time",
        "saturation_rate",
        "halt_interval",
        "halt_duration",
        "rng_seed",
        "clock_offset",
        "clock_drift",
        "pns_attack",
        "eve_axis",
        "record_eve",
        "temporal_bin_width",
        "spectral_bin_width",
        "filter_center",
        "filter_fwhm",
        "filter_shape",
        "apply_filter",
        "sync_min_detections",
        "sync_confidence",
        "sync_drift_range",
        "sync_max_events",
        "qber_limit",
        "count_rate_bin",
    }
)

PRESETS: dict[str, dict[str, Any]] = {
    # Every default of SessionConfig is already a published constant.
    "paper_defaults": {},
    # Bench QBERs of the R, L and H channels entered as configured error rates.
    "tabletop": {
        "polarization_error_by_state": {"R": 0.0193, "L": 0.0150, "H": 0.0205},
    },
}

ENV_MAPPING: dict[str, str] = {
    "LUMENQKD_RNG_SEED": "rng_seed",
    "LUMENQKD_CHANNEL_TRANSMISSIVITY": "channel_transmissivity",
    "LUMENQKD_POLARIZATION_ERROR_PROB": "polarization_error_prob",
    "LUMENQKD_PHOTON_STATISTICS": "photon_statistics",
    "LUMENQKD_DARK_RATE": "dark_rate",
    "LUMENQKD_CLOCK_OFFSET": "clock_offset",
    "LUMENQKD_CLOCK_DRIFT": "clock_drift",
}


SESSION_FILE_ENV = "LUMENQKD_CONFIG"
SESSION_FILE_NAMES: tuple[str, ...] = ("lumenqkd.yaml", "lumenqkd.yml")


def locate_session_file(directory: Path | None = None) -> Path | None:
    """Session file to load when no preset or path is given.

    LUMENQKD_CONFIG wins when set; otherwise the first of SESSION_FILE_NAMES
    present in ``directory`` (the working directory by default).

    Raises:
        ConfigurationError: If LUMENQKD_CONFIG names a missing file
    """
    named = os.environ.get(SESSION_FILE_ENV)
    if named:
        path = Path(named).expanduser()
        if not path.is_file():
            raise ConfigurationError(f"{SESSION_FILE_ENV} points to missing file '{path}'")
        return path

    base = directory if directory is not None else Path(os.environ.get("PWD", os.getcwd()))
    return next((base / name for name in SESSION_FILE_NAMES if (base / name).is_file()), None)


def load_yaml_config(path: Path) -> dict[str, Any] | None:
    """Load and parse a YAML configuration file.

    Args:
        path: Path to the YAML file to load

    Returns:
        Parsed YAML content as a dictionary, or None if loading fails
        or the document is not a mapping
    """
    try:
        with open(path) as f:
            content = yaml.safe_load(f)

        if not isinstance(content, dict):
            return None

        return content

    except (OSError, yaml.YAMLError):
        return None


def resolve_preset(name: str) -> dict[str, Any]:
    """Return a copy of a named preset.

    Raises:
        ConfigurationError: If the preset is unknown
    """
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigurationError(f"Unknown config preset '{name}' (known: {known})")
    return {key: value for key, value in PRESETS[name].items()}


def merge_config_settings(
    yaml_dict: dict[str, Any] | None,
    env_vars: dict[str, str | None],
    preset: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Merge preset, YAML and environment settings.

    Environment variables take priority over YAML values, which take
    priority over the preset. Anything unset falls back to the
    SessionConfig defaults.

    Args:
        yaml_dict: Parsed YAML configuration (may be None)
        env_vars: Mapping of LUMENQKD_* variable names to values
        preset: Preset values (may be None)

    Returns:
        Keyword arguments for SessionConfig

    Raises:
        ConfigurationError: If the YAML file or preset contains an unknown key
    """
    config: dict[str, Any] = {}

    for source_name, source in (("preset", preset), ("config file", yaml_dict)):
        if not source:
            continue
        for key, value in source.items():
            if key not in CONFIG_KEYS:
                raise ConfigurationError(f"Unknown configuration key '{key}' in {source_name}")
            config[key] = value

    for env_key, config_key in ENV_MAPPING.items():
        value = env_vars.get(env_key)
        if value:
            config[config_key] = value

    return config
