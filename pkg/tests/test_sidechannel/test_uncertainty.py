"""Tests for the propagation and Monte-Carlo uncertainty estimators."""

import numpy as np
import pytest
from scipy import stats

from lumenqkd.exceptions import EstimatorError
from lumenqkd.model import SideChannelAxis
from lumenqkd.sidechannel import (
    BiasConvention,
    MonteCarloEstimator,
    PropagationEstimator,
    ProtocolProbabilities,
    UncertaintyMethod,
    mi_bias,
    mi_uncertainty_montecarlo,
    mi_uncertainty_propagation,
    mutual_information,
    propagate_uncertainty,
)
from lumenqkd.transmitter import SourceProfile

SKEWED = ([0.4, 0.3, 0.2, 0.1], [0.1, 0.2, 0.3, 0.4])


def counted_profiles(*pdfs, total=10_000):
    return [
        SourceProfile(i, SideChannelAxis.TEMPORAL, 20.0 * np.arange(len(p)), np.asarray(p) * total)
        for i, p in enumerate(pdfs)
    ]


def exact_profiles(*pdfs):
    return [
        SourceProfile.from_pdf(i, SideChannelAxis.TEMPORAL, 20.0 * np.arange(len(p)), p)
        for i, p in enumerate(pdfs)
    ]


@pytest.fixture
def probs():
    return ProtocolProbabilities(
        p_a=[0.5, 0.5], p_s_given_a=[1.0, 1.0], p_b_given_as=[[1.0, 0.0], [0.0, 1.0]]
    )


class TestPropagateUncertainty:
    """Test suite for propagate_uncertainty function."""

    def test_linear_function(self):
        """Test that f = 3x with sigma 0.1 propagates to 0.3."""
        sigma = propagate_uncertainty(lambda x: 3 * x[0], np.array([2.0]), np.array([0.1]))

        assert sigma == pytest.approx(0.3, rel=1e-6)

    def test_forward_difference_at_boundary(self):
        """Test that a variable at zero is differentiated forward and still propagates."""
        sigma = propagate_uncertainty(lambda x: 3 * x[0], np.array([0.0]), np.array([0.1]))

        assert sigma == pytest.approx(0.3, rel=1e-6)

    def test_quadrature_sum(self):
        """Test that independent contributions add in quadrature."""
        sigma = propagate_uncertainty(
            lambda x: 3 * x[0] + 4 * x[1], np.array([1.0, 1.0]), np.array([0.1, 0.1])
        )

        assert sigma == pytest.approx(0.5, rel=1e-6)

    def test_zero_errors(self):
        """Test that all-zero errors give zero uncertainty."""
        assert propagate_uncertainty(np.sum, np.ones(3), np.zeros(3)) == 0.0

    def test_step_underflow(self):
        """Test that a step too small to change x raises EstimatorError."""
        with pytest.raises(EstimatorError):
            propagate_uncertainty(np.sum, np.array([1e20]), np.array([1.0]))

    def test_shape_mismatch(self):
        """Test that x and sigma of different shape raise EstimatorError."""
        with pytest.raises(EstimatorError):
            propagate_uncertainty(np.sum, np.ones(2), np.ones(3))


class TestMIUncertaintyPropagation:
    """Test suite for mi_uncertainty_propagation function."""

    def test_exact_profiles(self, probs):
        """Test that exact profiles carry no uncertainty."""
        assert mi_uncertainty_propagation(exact_profiles(*SKEWED), probs) == 0.0

    def test_explicit_zero_sigmas(self, probs):
        """Test that explicit zero errors override the counting errors."""
        sigma = mi_uncertainty_propagation(counted_profiles(*SKEWED), probs, sigmas=np.zeros(8))

        assert sigma == 0.0

    def test_shrinks_with_counts(self, probs):
        """Test that a hundred times more counts cut the uncertainty tenfold."""
        low = mi_uncertainty_propagation(counted_profiles(*SKEWED, total=10_000), probs)
        high = mi_uncertainty_propagation(counted_profiles(*SKEWED, total=1_000_000), probs)

        assert high == pytest.approx(low / 10, rel=0.01)

    def test_estimator_class(self, probs):
        """Test that PropagationEstimator wraps the function."""
        profiles = counted_profiles(*SKEWED)

        result = PropagationEstimator().estimate(profiles, probs)

        assert result.method is UncertaintyMethod.PROPAGATION
        assert result.sigma_bits == mi_uncertainty_propagation(profiles, probs)
        assert result.samples is None


class TestMIUncertaintyMonteCarlo:
    """Test suite for mi_uncertainty_montecarlo function."""

    def test_too_few_samples(self, probs):
        """Test that fewer than 100 trials raise EstimatorError."""
        with pytest.raises(EstimatorError):
            mi_uncertainty_montecarlo(counted_profiles(*SKEWED), probs, n_samples=99)

    def test_exact_profiles(self, probs):
        """Test that exact profiles are never resampled."""
        result = mi_uncertainty_montecarlo(exact_profiles(*SKEWED), probs, n_samples=100)

        assert result.sigma_bits == 0.0
        assert np.allclose(result.samples, result.samples[0])

    def test_seed_determinism(self, probs):
        """Test that one seed reproduces the trials and another changes them."""
        profiles = counted_profiles(*SKEWED)

        first = mi_uncertainty_montecarlo(profiles, probs, n_samples=100, rng=4)
        again = mi_uncertainty_montecarlo(profiles, probs, n_samples=100, rng=4)
        other = mi_uncertainty_montecarlo(profiles, probs, n_samples=100, rng=5)

        assert np.array_equal(first.samples, again.samples)
        assert not np.array_equal(first.samples, other.samples)

    def test_worker_pool_matches_in_process(self, probs):
        """Test that spreading trials over two processes gives the same values."""
        profiles = counted_profiles(*SKEWED)

        serial = mi_uncertainty_montecarlo(profiles, probs, n_samples=200, rng=8)
        pooled = mi_uncertainty_montecarlo(profiles, probs, n_samples=200, rng=8, workers=2)

        assert np.array_equal(serial.samples, pooled.samples)

    def test_histogram_counts_every_trial(self, probs):
        """Test that the histogram holds every trial value."""
        result = mi_uncertainty_montecarlo(counted_profiles(*SKEWED), probs, n_samples=300)

        counts, edges = result.histogram
        assert counts.sum() == 300
        assert edges.size == counts.size + 1
        assert result.details["n_samples"] == 300

    def test_identical_profiles_show_bias(self, probs):
        """Test that resampled identical profiles give non-negative I near the plug-in bias."""
        pdf = np.full(16, 1 / 16)
        profiles = counted_profiles(pdf, pdf, total=10_000)

        result = mi_uncertainty_montecarlo(profiles, probs, n_samples=1000, rng=1)

        assert np.all(result.samples >= 0)
        assert result.samples.mean() == pytest.approx(
            mi_bias(profiles, probs, BiasConvention.PLUG_IN).bits, rel=0.2
        )

    def test_agrees_with_propagation(self, probs):
        """Test that both estimators agree within 15% on well-sampled profiles."""
        profiles = counted_profiles(*SKEWED, total=1_000_000)

        propagated = mi_uncertainty_propagation(profiles, probs)
        sampled = mi_uncertainty_montecarlo(profiles, probs, n_samples=1000, rng=2)

        assert sampled.sigma_bits == pytest.approx(propagated, rel=0.15)

    def test_low_counts_depart_from_propagation(self, probs):
        """Test that 50 counts per bin give a skewed, shifted spread the linearisation misses."""
        pdf = np.full(8, 1 / 8)
        profiles = counted_profiles(pdf, pdf, total=400)

        propagated = mi_uncertainty_propagation(profiles, probs)
        sampled = mi_uncertainty_montecarlo(profiles, probs, n_samples=2000, rng=3)

        assert propagated < 0.85 * sampled.sigma_bits
        assert np.all(sampled.samples >= 0)
        assert stats.skew(sampled.samples) > 0
        assert sampled.samples.mean() > mutual_information(profiles, probs).i_bits

    def test_estimator_class(self, probs):
        """Test that MonteCarloEstimator forwards its settings."""
        profiles = counted_profiles(*SKEWED)

        result = MonteCarloEstimator(n_samples=100, seed=3).estimate(profiles, probs)
        direct = mi_uncertainty_montecarlo(profiles, probs, n_samples=100, rng=3)

        assert result.method is UncertaintyMethod.MONTE_CARLO
        assert np.array_equal(result.samples, direct.samples)
