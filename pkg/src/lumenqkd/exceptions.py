"""Custom exceptions for lumenqkd.

This module defines the exception hierarchy used across the simulator,
post-processing and side-channel analysis.
"""


class LumenQKDError(Exception):
    """Base exception for all lumenqkd errors.

    All library exceptions inherit from this class, allowing callers
    to catch every failure with a single except clause.
    """

    pass


class ConfigurationError(LumenQKDError):
    """Raised when a configuration file, preset or key is invalid.

    The message always names the offending key or file.
    """

    pass


class InvalidPreparationError(LumenQKDError):
    """Raised for a (state, intensity) pair the three-state protocol never sends.

    This includes any preparation of |V> and the reserved state code 7.
    """

    pass


class ProfileError(LumenQKDError):
    """Raised when a side-channel profile is malformed or incompatible.

    Covers binning mismatches between states, non-uniform bins,
    bad CSV headers and filters disjoint from the spectrum.
    """

    pass


class TagAmbiguityError(LumenQKDError):
    """Raised when rolled-over time tags cannot be unwrapped unambiguously."""

    pass


class SyncRejectedError(LumenQKDError):
    """Raised when clock synchronization confidence is below the acceptance level.

    The session data must then be discarded.
    """

    pass


class EstimatorError(LumenQKDError):
    """Raised when an entropy or mutual-information estimate cannot be formed.

    Typical causes are distributions that do not sum to one, negative
    probabilities, nothing sifting, or finite-difference steps that
    underflow machine precision.
    """

    pass
