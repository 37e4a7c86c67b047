"""End-to-end side-channel analysis and its report."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lumenqkd.model import SideChannelAxis
from lumenqkd.sidechannel.distributions import ProfileRows, ProtocolProbabilities, profile_matrix
from lumenqkd.sidechannel.entropy import BiasConvention
from lumenqkd.sidechannel.montecarlo import mi_uncertainty_montecarlo
from lumenqkd.sidechannel.mutual_info import mi_bias, mutual_information
from lumenqkd.sidechannel.propagation import mi_uncertainty_propagation

logger = logging.getLogger(__name__)


@dataclass
class MIReport:
    """Mutual information between Bob and an eavesdropper on one side channel.

    Attributes:
        i_bits: I(B;E|S) in bits
        h_b_given_s: H(B|S) in bits
        h_e_given_s: H(E|S) in bits
        h_be_given_s: H(B,E|S) in bits
        fractional: I / H(B|S), None when undefined
        bias_bits: Expected shift of the observed I
        corrected_i_bits: I minus its bias
        sigma_propagation: Propagated uncertainty in bits, None if not computed
        sigma_montecarlo: Monte-Carlo uncertainty in bits, None if not computed
        axis: Side-channel axis analysed
        metadata: Bin width, state count, total counts and the bias convention
        flags: Notes from the bias estimate
        mc_samples: Monte-Carlo trial values
        mc_histogram: (counts, edges) of the trial values
    """

    i_bits: float
    h_b_given_s: float
    h_e_given_s: float
    h_be_given_s: float
    fractional: float | None
    bias_bits: float
    corrected_i_bits: float
    sigma_propagation: float | None
    sigma_montecarlo: float | None
    axis: SideChannelAxis | None
    metadata: dict[str, object] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    mc_samples: np.ndarray | None = field(default=None, repr=False)
    mc_histogram: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def to_dict(self) -> dict[str, object]:
        return {
            "I": self.i_bits,
            "H_B_given_S": self.h_b_given_s,
            "H_E_given_S": self.h_e_given_s,
            "H_BE_given_S": self.h_be_given_s,
            "fractional": self.fractional,
            "bias": self.bias_bits,
            "I_corrected": self.corrected_i_bits,
            "sigma_propagation": self.sigma_propagation,
            "sigma_montecarlo": self.sigma_montecarlo,
            "axis": self.axis.value if self.axis is not None else None,
            "metadata": dict(self.metadata),
            "flags": list(self.flags),
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def summary(self) -> str:
        axis = self.axis.value if self.axis is not None else "unspecified"
        fractional = "undefined" if self.fractional is None else f"{self.fractional:.6g}"
        lines = [
            f"Side channel: {axis}",
            f"I(B;E|S) = {self.i_bits:.6g} bits (bias-corrected {self.corrected_i_bits:.6g})",
            f"H(B|S) = {self.h_b_given_s:.6g} bits, fractional = {fractional}",
            f"Bias = {self.bias_bits:.3g} bits",
        ]
        if self.sigma_propagation is not None:
            lines.append(f"Propagated uncertainty = {self.sigma_propagation:.3g} bits")
        if self.sigma_montecarlo is not None:
            lines.append(f"Monte-Carlo uncertainty = {self.sigma_montecarlo:.3g} bits")
        lines.extend(f"Note: {flag}" for flag in self.flags)
        return "\n".join(lines)


def analyze_side_channel(
    profiles: ProfileRows,
    probs: ProtocolProbabilities,
    axis: SideChannelAxis | None = None,
    mc_samples: int | None = 1000,
    seed: int | None = 0,
    convention: BiasConvention = BiasConvention.STATED,
    propagate: bool = True,
    workers: int | None = None,
) -> MIReport:
    """Mutual information, bias and both uncertainties for one set of profiles.

    Args:
        profiles: Per-state profiles aligned with the protocol rows
        probs: Protocol probabilities
        axis: Axis of the profiles, taken from the first profile when None
        mc_samples: Monte-Carlo trials; None or 0 skips Monte-Carlo
        seed: Seed of the Monte-Carlo trials
        convention: Direction of the entropy bias
        propagate: Whether to run error propagation
        workers: Worker processes for the Monte-Carlo trials

    Returns:
        MIReport
    """
    mi = mutual_information(profiles, probs)
    bias = mi_bias(profiles, probs, convention)
    e_matrix, _ = profile_matrix(profiles, probs)
    present = [p for p in profiles if p is not None]
    if axis is None:
        axis = present[0].axis

    sigma_prop = mi_uncertainty_propagation(profiles, probs) if propagate else None
    mc = None
    if mc_samples:
        mc = mi_uncertainty_montecarlo(profiles, probs, mc_samples, rng=seed, workers=workers)

    flags = list(bias.flags)
    if mi.fractional is None:
        flags.append("H(B|S) is zero: fractional mutual information undefined")

    report = MIReport(
        i_bits=mi.i_bits,
        h_b_given_s=mi.h_b,
        h_e_given_s=mi.h_e,
        h_be_given_s=mi.h_be,
        fractional=mi.fractional,
        bias_bits=bias.bits,
        corrected_i_bits=mi.i_bits - bias.bits,
        sigma_propagation=sigma_prop,
        sigma_montecarlo=mc.sigma_bits if mc is not None else None,
        axis=SideChannelAxis(axis),
        metadata={
            "bin_width": present[0].bin_width,
            "n_bins": int(e_matrix.shape[1]),
            "n_states": probs.n_states,
            "total_counts": [p.total_counts if p is not None else 0.0 for p in profiles],
            "exact": [bool(p.exact) if p is not None else None for p in profiles],
            "bias_convention": BiasConvention(convention).value,
            "mc_samples": mc_samples or 0,
            "seed": seed,
        },
        flags=flags,
        mc_samples=mc.samples if mc is not None else None,
        mc_histogram=mc.histogram if mc is not None else None,
    )
    logger.info("I(B;E|S) = %.6g bits on the %s axis", report.i_bits, report.axis.value)
    return report
