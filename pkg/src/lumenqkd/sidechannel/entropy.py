"""Shannon entropy and its first-order finite-sample bias.

Entropies are reported in bits. The bias of an entropy computed from a
histogram with per-bin standard errors sigma_i is sum(sigma_i^2 / (2 q_i))
in nats; bins with q_i = 0 are left out of the sum.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import entr

from lumenqkd.exceptions import EstimatorError

logger = logging.getLogger(__name__)

LN2 = float(np.log(2.0))
NORMALIZATION_TOLERANCE = 1e-9


class BiasConvention(str, Enum):
    """Direction in which finite sampling shifts an observed entropy.

    STATED is the default everywhere. Poisson-noised histograms fed to a
    plug-in estimator drift the other way, so PLUG_IN stays selectable.

    Attributes:
        PLUG_IN: H_obs = H - bias, the behaviour of histogram plug-in estimates
        STATED: H_obs = H + bias
    """

    PLUG_IN = "plug_in"
    STATED = "stated"

    @property
    def sign(self) -> int:
        return -1 if self is BiasConvention.PLUG_IN else 1


@dataclass
class EntropyBias:
    """Bias term of one entropy.

    Attributes:
        nats: sum(sigma^2 / 2q) over bins with q > 0, natural-log units
        excluded: Indices of bins with q = 0 but sigma > 0
        flags: Human-readable notes on excluded bins
    """

    nats: float
    excluded: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    flags: list[str] = field(default_factory=list)

    @property
    def bits(self) -> float:
        return self.nats / LN2


def validate_distribution(p: np.ndarray, name: str = "distribution") -> np.ndarray:
    """Return ``p`` as a float array after checking it is a probability distribution.

    Raises:
        EstimatorError: On negative or non-finite entries, or a sum off 1 by more than 1e-9
    """
    p = np.asarray(p, dtype=float)
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise EstimatorError(f"{name} must be a non-empty array of finite values")
    if np.any(p < 0):
        raise EstimatorError(f"{name} has negative entries")
    total = float(p.sum())
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise EstimatorError(f"{name} sums to {total:.12g}, not 1")
    return p


def entropy_nats(p: np.ndarray) -> float:
    """Entropy in nats without validation; 0 log 0 counts as 0."""
    return float(entr(np.asarray(p, dtype=float)).sum())


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in bits of a validated distribution.

    Raises:
        EstimatorError: If ``p`` is not a probability distribution
    """
    return entropy_nats(validate_distribution(p)) / LN2


def entropy_bias(q: np.ndarray, sigma: np.ndarray) -> EntropyBias:
    """First-order bias of an entropy estimated from a noisy histogram.

    Args:
        q: Measured distribution
        sigma: Standard error of every bin on the probability scale

    Returns:
        EntropyBias; the magnitude is always non-negative
    """
    q = np.asarray(q, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float).ravel()
    if q.shape != sigma.shape:
        raise EstimatorError("q and sigma must have the same shape")
    if np.any(sigma < 0):
        raise EstimatorError("standard errors must be non-negative")

    used = q > 0
    excluded = np.flatnonzero(~used & (sigma > 0))
    flags = []
    if excluded.size:
        flags.append(f"{excluded.size} bin(s) with zero probability but non-zero error excluded")
        logger.debug("Entropy bias excludes bins %s", excluded[:10])
    nats = float(np.sum(sigma[used] ** 2 / (2.0 * q[used])))
    return EntropyBias(nats=nats, excluded=excluded, flags=flags)
