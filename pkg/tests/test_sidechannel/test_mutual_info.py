"""Tests for the mutual information between Bob and Eve."""

import numpy as np
import pytest

from lumenqkd.exceptions import EstimatorError
from lumenqkd.model import SideChannelAxis
from lumenqkd.sidechannel import (
    BiasConvention,
    ProtocolProbabilities,
    mi_bias,
    mutual_information,
    plug_in_mutual_information,
)
from lumenqkd.transmitter import SourceProfile

HAND_CASE_BITS = 0.75 * np.log2(1.5) + 0.25 * np.log2(0.5)


def exact_profiles(*pdfs, width=20.0):
    return [
        SourceProfile.from_pdf(i, SideChannelAxis.TEMPORAL, width * np.arange(len(p)), p)
        for i, p in enumerate(pdfs)
    ]


def counted_profiles(*pdfs, total=10_000):
    return [
        SourceProfile(i, SideChannelAxis.TEMPORAL, 20.0 * np.arange(len(p)), np.asarray(p) * total)
        for i, p in enumerate(pdfs)
    ]


def two_state(p_s=(1.0, 1.0), b=((1.0, 0.0), (0.0, 1.0))):
    return ProtocolProbabilities(
        p_a=[0.5, 0.5], p_s_given_a=list(p_s), p_b_given_as=[list(row) for row in b]
    )


def enumerate_mi(p_a, b, e):
    """I(B;E) by summing p(b,e) log p(b,e)/(p(b)p(e)) over every cell."""
    joint = np.einsum("i,ik,ij->kj", p_a, b, e)
    p_b, p_e = joint.sum(axis=1), joint.sum(axis=0)
    total = 0.0
    for k in range(joint.shape[0]):
        for j in range(joint.shape[1]):
            if joint[k, j] > 0:
                total += joint[k, j] * np.log2(joint[k, j] / (p_b[k] * p_e[j]))
    return total


class TestMutualInformation:
    """Test suite for mutual_information function."""

    def test_identical_profiles(self):
        """Test that identical profiles leak nothing."""
        common = [0.1, 0.2, 0.3, 0.4]

        result = mutual_information(exact_profiles(common, common), two_state())

        assert result.i_bits <= 1e-12
        assert result.fractional <= 1e-12

    def test_disjoint_profiles(self):
        """Test that disjoint profiles with distinct bits leak the full bit."""
        result = mutual_information(exact_profiles([1.0, 0.0], [0.0, 1.0]), two_state())

        assert result.i_bits == pytest.approx(1.0, abs=1e-9)
        assert result.fractional == pytest.approx(1.0, abs=1e-9)

    def test_hand_case(self):
        """Test the 2-bin (0.75, 0.25) / (0.25, 0.75) case against enumeration."""
        e = np.array([[0.75, 0.25], [0.25, 0.75]])

        result = mutual_information(exact_profiles(*e), two_state())

        oracle = enumerate_mi(np.array([0.5, 0.5]), np.eye(2), e)
        assert oracle == pytest.approx(HAND_CASE_BITS, abs=1e-12)
        assert result.i_bits == pytest.approx(0.188722, abs=1e-6)
        assert result.i_bits == pytest.approx(oracle, abs=1e-12)
        assert result.h_b == pytest.approx(1.0)

    def test_bounded_by_marginal_entropies(self):
        """Test 0 <= I <= min(H(B|S), H(E|S)) on random instances."""
        rng = np.random.default_rng(13)
        for _ in range(20):
            e = rng.dirichlet(np.ones(5), size=3)
            probs = ProtocolProbabilities(
                p_a=rng.dirichlet(np.ones(3)).tolist(),
                p_s_given_a=rng.uniform(0.1, 1.0, 3).tolist(),
                p_b_given_as=rng.dirichlet(np.ones(2), size=3).tolist(),
            )

            result = mutual_information(exact_profiles(*e), probs)

            assert 0.0 <= result.i_bits <= min(result.h_b, result.h_e) + 1e-12

    def test_bin_permutation_invariance(self):
        """Test that relabelling Eve's bins the same way for every state keeps I."""
        e = np.array([[0.5, 0.3, 0.1, 0.1], [0.1, 0.2, 0.3, 0.4]])
        order = [2, 0, 3, 1]

        original = mutual_information(exact_profiles(*e), two_state())
        permuted = mutual_information(exact_profiles(*e[:, order]), two_state())

        assert permuted.i_bits == pytest.approx(original.i_bits, abs=1e-12)

    def test_bin_refinement_invariance(self):
        """Test that splitting every bin in two with half its mass keeps I."""
        e = np.array([[0.75, 0.25], [0.25, 0.75]])
        refined = np.repeat(e / 2, 2, axis=1)

        coarse = mutual_information(exact_profiles(*e), two_state())
        fine = mutual_information(exact_profiles(*refined, width=10.0), two_state())

        assert fine.i_bits == pytest.approx(coarse.i_bits, abs=1e-12)

    def test_fractional_undefined(self):
        """Test that a deterministic Bob outcome leaves the fractional MI undefined."""
        result = mutual_information(
            exact_profiles([0.5, 0.5], [0.2, 0.8]), two_state(p_s=(1.0, 0.0))
        )

        assert result.h_b == 0.0
        assert result.fractional is None


class TestMIBias:
    """Test suite for mi_bias function."""

    def test_exact_profiles_have_no_bias(self):
        """Test that profiles without counting error give zero bias."""
        bias = mi_bias(exact_profiles([0.75, 0.25], [0.25, 0.75]), two_state())

        assert bias.bits == 0.0

    def test_identical_counted_profiles(self):
        """Test bias(B) + bias(E) - bias(B,E) = -K / (4N) nats for identical K-bin profiles."""
        pdf = np.full(8, 1 / 8)

        bias = mi_bias(counted_profiles(pdf, pdf, total=10_000), two_state())

        assert bias.convention is BiasConvention.STATED
        assert bias.bits == pytest.approx(-8 / (4 * 10_000) / np.log(2))
        assert bias.b_bits == 0.0

    def test_plug_in_convention_flips_sign(self):
        """Test that the plug-in convention reverses the bias direction."""
        profiles = counted_profiles([0.6, 0.4], [0.3, 0.7])

        stated = mi_bias(profiles, two_state())
        plug_in = mi_bias(profiles, two_state(), BiasConvention.PLUG_IN)

        assert stated.bits == pytest.approx(-plug_in.bits)

    def test_default_adds_marginal_biases(self):
        """Test that the default bias is bias(B) + bias(E) - bias(B,E)."""
        profiles = counted_profiles([0.6, 0.4], [0.3, 0.7])

        bias = mi_bias(profiles, two_state())

        assert bias.bits == pytest.approx(bias.b_bits + bias.e_bits - bias.be_bits)
        assert bias.be_bits > 0.0


class TestPlugInMutualInformation:
    """Test suite for plug_in_mutual_information function."""

    def test_identical_bits(self):
        """Test that a uniform bit paired with itself carries one bit."""
        x = np.tile([0, 1], 500)

        estimate = plug_in_mutual_information(x, x)

        assert estimate.i_bits == pytest.approx(1.0)
        assert estimate.n == 1000

    def test_independent_samples(self, rng):
        """Test that independent samples give only the small plug-in bias."""
        x = rng.integers(0, 2, 100_000)
        y = rng.integers(0, 8, 100_000)

        estimate = plug_in_mutual_information(x, y)

        assert estimate.i_bits < estimate.bias_bits + 6 * np.sqrt(2 * 7) / (2 * 100_000 * np.log(2))
        assert estimate.bias_bits == pytest.approx(7 / (2 * 100_000 * np.log(2)))

    def test_mismatched_lengths(self):
        """Test that samples of different length raise EstimatorError."""
        with pytest.raises(EstimatorError):
            plug_in_mutual_information([0, 1], [0])

    def test_closure_with_analytic_value(self, rng):
        """Test 10^6 sampled (A, B, E) events against the analytic I(B;E|S)."""
        n = 1_000_000
        bins = np.arange(16)
        e = np.vstack([np.exp(-0.5 * ((bins - c) / 2.5) ** 2) for c in (6.0, 9.0)])
        e /= e.sum(axis=1, keepdims=True)
        b = np.array([[0.98, 0.02], [0.02, 0.98]])
        probs = two_state(b=b)
        analytic = mutual_information(exact_profiles(*e), probs)

        states = (rng.random(n) < 0.5).astype(np.int64)
        bob = (rng.random(n) < b[states, 1]).astype(np.int64)
        cdf = np.cumsum(e, axis=1)
        eve = np.empty(n, dtype=np.int64)
        for s in (0, 1):
            mask = states == s
            eve[mask] = np.searchsorted(cdf[s], rng.random(int(mask.sum())) * cdf[s, -1], "right")

        estimate = plug_in_mutual_information(bob, eve)

        tolerance = 4 * estimate.sigma_bits + estimate.bias_bits
        assert abs(estimate.i_bits - analytic.i_bits) < tolerance
