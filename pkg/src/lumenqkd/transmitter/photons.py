"""Photon-number statistics of the attenuated sources.

Attenuated LED pulses follow thermal (Bose-Einstein) statistics
P(n) = mu^n / (1 + mu)^(n + 1); Poisson statistics are kept for
laser-like sources and the textbook decoy analysis.
"""

import numpy as np
from scipy import stats

from lumenqkd.model import PhotonStatistics


def sample_photon_number(
    mu: float | np.ndarray,
    statistics: PhotonStatistics,
    rng: np.random.Generator,
    size: int | None = None,
) -> int | np.ndarray:
    """Draw photon numbers for one or many wavepackets.

    Args:
        mu: Mean photon number, scalar or per-wavepacket array (>= 0)
        statistics: Thermal or Poisson
        rng: Random generator
        size: Number of draws for scalar mu; ignored when mu is an array

    Returns:
        Photon number(s) >= 0
    """
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(mu_arr < 0):
        raise ValueError("mean photon number must be non-negative")
    shape = mu_arr.shape if mu_arr.ndim else size

    if PhotonStatistics(statistics) is PhotonStatistics.THERMAL:
        # Geometric on {1, 2, ...} with p = 1/(1+mu), shifted to start at 0.
        draws = rng.geometric(1.0 / (1.0 + mu_arr), size=shape) - 1
    else:
        draws = rng.poisson(mu_arr, size=shape)

    if shape is None:
        return int(draws)
    return draws.astype(np.int64)


def photon_number_pmf(
    mu: float, statistics: PhotonStatistics, n: int | np.ndarray
) -> float | np.ndarray:
    """Probability of exactly ``n`` photons for mean ``mu``."""
    n = np.asarray(n)
    if mu == 0:
        return np.where(n == 0, 1.0, 0.0)[()]
    if PhotonStatistics(statistics) is PhotonStatistics.THERMAL:
        return stats.geom.pmf(n + 1, 1.0 / (1.0 + mu))[()]
    return stats.poisson.pmf(n, mu)[()]


def multiphoton_probability(mu: float, statistics: PhotonStatistics) -> float:
    """Probability that a wavepacket carries two or more photons."""
    return float(1.0 - photon_number_pmf(mu, statistics, 0) - photon_number_pmf(mu, statistics, 1))
