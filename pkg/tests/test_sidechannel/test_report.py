"""Tests for the side-channel analysis report."""

import json

import numpy as np
import pytest

from lumenqkd.model import SideChannelAxis
from lumenqkd.sidechannel import BiasConvention, ProtocolProbabilities, analyze_side_channel
from lumenqkd.transmitter import SourceProfile

HAND_CASE = ([0.75, 0.25], [0.25, 0.75])


def exact_profiles(*pdfs, axis=SideChannelAxis.SPECTRAL):
    return [
        SourceProfile.from_pdf(i, axis, 650.0 + 0.3 * np.arange(len(p)), p)
        for i, p in enumerate(pdfs)
    ]


def counted_profiles(*pdfs, total=50_000):
    return [
        SourceProfile(i, SideChannelAxis.TEMPORAL, 20.0 * np.arange(len(p)), np.asarray(p) * total)
        for i, p in enumerate(pdfs)
    ]


def two_state(p_s=(1.0, 1.0)):
    return ProtocolProbabilities(
        p_a=[0.5, 0.5], p_s_given_a=list(p_s), p_b_given_as=[[1.0, 0.0], [0.0, 1.0]]
    )


class TestAnalyzeSideChannel:
    """Test suite for analyze_side_channel function."""

    def test_hand_case(self):
        """Test the exact 2-bin case without Monte-Carlo."""
        report = analyze_side_channel(exact_profiles(*HAND_CASE), two_state(), mc_samples=None)

        assert report.i_bits == pytest.approx(0.188722, abs=1e-6)
        assert report.h_b_given_s == pytest.approx(1.0)
        assert report.fractional == pytest.approx(0.188722, abs=1e-6)
        assert report.bias_bits == 0.0
        assert report.corrected_i_bits == report.i_bits
        assert report.sigma_propagation == 0.0
        assert report.sigma_montecarlo is None
        assert report.mc_samples is None

    def test_axis_from_profiles(self):
        """Test that the axis defaults to that of the profiles."""
        report = analyze_side_channel(exact_profiles(*HAND_CASE), two_state(), mc_samples=None)

        assert report.axis is SideChannelAxis.SPECTRAL

    def test_metadata(self):
        """Test that the metadata records binning, states and the bias convention."""
        report = analyze_side_channel(
            counted_profiles(*HAND_CASE), two_state(), mc_samples=100, seed=6
        )

        assert report.metadata["n_bins"] == 2
        assert report.metadata["n_states"] == 2
        assert report.metadata["bin_width"] == pytest.approx(20.0)
        assert report.metadata["bias_convention"] == "stated"
        assert report.metadata["mc_samples"] == 100
        assert report.metadata["exact"] == [False, False]

    def test_counted_profiles_carry_uncertainty(self):
        """Test that counted profiles get a bias and both uncertainties."""
        report = analyze_side_channel(counted_profiles(*HAND_CASE), two_state(), mc_samples=200)

        assert report.bias_bits < 0
        assert report.corrected_i_bits > report.i_bits
        assert report.sigma_propagation > 0
        assert report.sigma_montecarlo > 0
        assert report.mc_histogram[0].sum() == 200

    def test_propagation_skipped(self):
        """Test that propagation can be switched off."""
        report = analyze_side_channel(
            counted_profiles(*HAND_CASE), two_state(), mc_samples=None, propagate=False
        )

        assert report.sigma_propagation is None

    def test_plug_in_convention(self):
        """Test that the plug-in convention reverses the bias and the correction."""
        profiles = counted_profiles(*HAND_CASE)

        stated = analyze_side_channel(profiles, two_state(), mc_samples=None)
        plug_in = analyze_side_channel(
            profiles, two_state(), mc_samples=None, convention=BiasConvention.PLUG_IN
        )

        assert plug_in.bias_bits == pytest.approx(-stated.bias_bits)
        assert plug_in.corrected_i_bits < plug_in.i_bits
        assert plug_in.metadata["bias_convention"] == "plug_in"

    def test_fractional_undefined_flagged(self):
        """Test that a zero H(B|S) is flagged and reported as undefined."""
        report = analyze_side_channel(
            exact_profiles(*HAND_CASE), two_state(p_s=(1.0, 0.0)), mc_samples=None
        )

        assert report.fractional is None
        assert any("fractional mutual information undefined" in f for f in report.flags)
        assert "fractional = undefined" in report.summary()


class TestMIReport:
    """Test suite for MIReport output."""

    def test_to_json(self, tmp_path):
        """Test that the JSON file holds the reported values."""
        report = analyze_side_channel(counted_profiles(*HAND_CASE), two_state(), mc_samples=100)
        path = tmp_path / "mi.json"

        text = report.to_json(path)

        loaded = json.loads(path.read_text())
        assert text == path.read_text()
        assert loaded["I"] == pytest.approx(report.i_bits)
        assert loaded["sigma_montecarlo"] == pytest.approx(report.sigma_montecarlo)
        assert loaded["axis"] == "temporal"
        assert set(loaded) >= {"H_B_given_S", "fractional", "bias", "I_corrected", "flags"}

    def test_summary(self):
        """Test that the summary states the mutual information and uncertainties."""
        report = analyze_side_channel(counted_profiles(*HAND_CASE), two_state(), mc_samples=100)

        summary = report.summary()

        assert "I(B;E|S) =" in summary
        assert "Propagated uncertainty" in summary
        assert "Monte-Carlo uncertainty" in summary
