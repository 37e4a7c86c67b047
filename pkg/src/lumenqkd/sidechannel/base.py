"""Base abstractions for mutual-information uncertainty estimators.

This module defines the interface shared by the error-propagation and
Monte-Carlo estimators and the result they return.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from lumenqkd.sidechannel.distributions import ProfileRows, ProtocolProbabilities


class UncertaintyMethod(str, Enum):
    """Technique used to estimate the uncertainty of I(B;E|S).

    Attributes:
        PROPAGATION: First-order propagation of per-bin errors via finite differences
        MONTE_CARLO: Standard deviation over Poisson-resampled profiles
    """

    PROPAGATION = "propagation"
    MONTE_CARLO = "monte_carlo"


@dataclass
class UncertaintyResult:
    """Uncertainty of the mutual information.

    Attributes:
        method: The technique that produced the estimate
        sigma_bits: Standard uncertainty of I in bits
        samples: Mutual-information samples, Monte-Carlo only
        histogram: (counts, bin edges) of the samples, Monte-Carlo only
        details: Method-specific extras
    """

    method: UncertaintyMethod
    sigma_bits: float
    samples: np.ndarray | None = None
    histogram: tuple[np.ndarray, np.ndarray] | None = None
    details: dict[str, object] = field(default_factory=dict)


class UncertaintyEstimator(ABC):
    """Abstract base class for mutual-information uncertainty estimators.

    Estimators are stateless apart from their settings, so one instance can
    be reused across profiles and protocol configurations.
    """

    method: UncertaintyMethod

    @abstractmethod
    def estimate(self, profiles: ProfileRows, probs: ProtocolProbabilities) -> UncertaintyResult:
        """Estimate the uncertainty of I(B;E|S).

        Returns:
            UncertaintyResult carrying the standard uncertainty in bits

        Raises:
            EstimatorError: If the estimate cannot be formed
            ProfileError: If the profiles are inconsistent
        """
        pass
