"""Tests for photon-number statistics."""

import numpy as np
import pytest
from scipy import stats

from lumenqkd.model import PhotonStatistics
from lumenqkd.transmitter.photons import (
    multiphoton_probability,
    photon_number_pmf,
    sample_photon_number,
)


class TestSamplePhotonNumber:
    """Test suite for sample_photon_number function."""

    def test_vacuum_always_zero(self, rng):
        """Test that mu = 0 never produces a photon."""
        draws = sample_photon_number(0.0, PhotonStatistics.THERMAL, rng, size=1000)

        assert np.all(draws == 0)

    def test_scalar_draw_is_int(self, rng):
        """Test that a scalar call returns a plain integer."""
        assert isinstance(sample_photon_number(1.0, PhotonStatistics.POISSON, rng), int)

    def test_thermal_mean_and_vacuum_share(self, rng):
        """Test the thermal mean and P(0) = 1/(1+mu) on 10^6 draws."""
        n = 1_000_000
        draws = sample_photon_number(1.0, PhotonStatistics.THERMAL, rng, size=n)

        # Thermal variance is mu + mu^2.
        assert abs(draws.mean() - 1.0) < 4 * np.sqrt(2.0 / n)
        assert abs(np.mean(draws == 0) - 0.5) < 4 * np.sqrt(0.25 / n)

    def test_poisson_multiphoton_share(self, rng):
        """Test P(n >= 2) for Poisson mu = 0.4 on 10^6 draws."""
        n = 1_000_000
        draws = sample_photon_number(0.4, PhotonStatistics.POISSON, rng, size=n)
        p = 1 - np.exp(-0.4) * 1.4

        assert p == pytest.approx(0.0616, abs=1e-4)
        assert abs(np.mean(draws >= 2) - p) < 4 * np.sqrt(p * (1 - p) / n)

    def test_thermal_histogram_chi_square(self, rng):
        """Test the thermal histogram against its pmf with a chi-square test at 1%."""
        n = 1_000_000
        draws = sample_photon_number(1.0, PhotonStatistics.THERMAL, rng, size=n)
        k = np.arange(8)
        observed = np.array([np.sum(draws == i) for i in k] + [np.sum(draws >= 8)])
        pmf = photon_number_pmf(1.0, PhotonStatistics.THERMAL, k)
        expected = n * np.append(pmf, 1 - pmf.sum())

        _, p_value = stats.chisquare(observed, expected)
        assert p_value > 0.01

    def test_array_mu(self, rng):
        """Test that an array of means yields one draw per entry."""
        draws = sample_photon_number(np.array([0.0, 1.0, 0.4]), PhotonStatistics.POISSON, rng)

        assert draws.shape == (3,)
        assert draws[0] == 0

    def test_negative_mu_rejected(self, rng):
        """Test that a negative mean raises ValueError."""
        with pytest.raises(ValueError):
            sample_photon_number(-0.1, PhotonStatistics.POISSON, rng)


class TestPhotonNumberPmf:
    """Test suite for photon_number_pmf and multiphoton_probability."""

    def test_thermal_closed_form(self):
        """Test P(n) = mu^n / (1+mu)^(n+1)."""
        n = np.arange(5)
        expected = 0.4**n / 1.4 ** (n + 1)

        assert np.allclose(photon_number_pmf(0.4, PhotonStatistics.THERMAL, n), expected)

    def test_poisson_closed_form(self):
        """Test the Poisson pmf at n = 2."""
        value = photon_number_pmf(1.0, PhotonStatistics.POISSON, 2)

        assert value == pytest.approx(np.exp(-1) / 2)

    def test_multiphoton_thermal(self):
        """Test 1 - P(0) - P(1) for thermal mu = 1."""
        assert multiphoton_probability(1.0, PhotonStatistics.THERMAL) == pytest.approx(0.25)
