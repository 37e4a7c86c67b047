"""Mutual information between Bob's sifted outcome and Eve's side-channel bin.

I(B;E|S) = H(B|S) + H(E|S) - H(B,E|S), all in bits. The fractional
mutual information I / H(B|S) is the share of the sifted key Eve could
learn from the side channel.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.exceptions import EstimatorError
from lumenqkd.sidechannel.distributions import (
    ProfileRows,
    ProtocolProbabilities,
    profile_matrix,
    sifted_distributions,
)
from lumenqkd.sidechannel.entropy import (
    LN2,
    BiasConvention,
    entropy_bias,
    entropy_nats,
    validate_distribution,
)

logger = logging.getLogger(__name__)

CLAMP_TOLERANCE = 1e-12


@dataclass
class MutualInformation:
    """Entropies and mutual information of one configuration, in bits.

    Attributes:
        i_bits: I(B;E|S)
        h_b: H(B|S)
        h_e: H(E|S)
        h_be: H(B,E|S)
        fractional: I / H(B|S), None when H(B|S) = 0
    """

    i_bits: float
    h_b: float
    h_e: float
    h_be: float
    fractional: float | None


def mi_from_matrices(
    weights: np.ndarray, b_matrix: np.ndarray, e_matrix: np.ndarray, validate: bool = True
) -> MutualInformation:
    """Mutual information from sifted weights and per-state outcome matrices."""
    p_b, p_e, joint = sifted_distributions(weights, b_matrix, e_matrix)
    if validate:
        validate_distribution(p_b, "p(B|S)")
        validate_distribution(p_e, "p(E|S)")
        validate_distribution(joint.ravel(), "p(B,E|S)")
    h_b = entropy_nats(p_b) / LN2
    h_e = entropy_nats(p_e) / LN2
    h_be = entropy_nats(joint) / LN2
    i_bits = h_b + h_e - h_be
    if -CLAMP_TOLERANCE <= i_bits < 0:
        i_bits = 0.0
    fractional = i_bits / h_b if h_b > 0 else None
    return MutualInformation(i_bits=i_bits, h_b=h_b, h_e=h_e, h_be=h_be, fractional=fractional)


def mutual_information(profiles: ProfileRows, probs: ProtocolProbabilities) -> MutualInformation:
    """I(B;E|S) of the given per-state side-channel profiles.

    Raises:
        EstimatorError: If nothing sifts or a distribution is invalid
        ProfileError: If a sifted state lacks a profile or binnings differ
    """
    e_matrix, _ = profile_matrix(profiles, probs)
    result = mi_from_matrices(probs.sift_weights(), probs.b_matrix, e_matrix)
    if result.fractional is None:
        logger.warning("H(B|S) is zero: fractional mutual information undefined")
    return result


@dataclass
class MIBias:
    """Finite-sample bias of the mutual information.

    Attributes:
        b_bits: Bias term of H(B|S)
        e_bits: Bias term of H(E|S)
        be_bits: Bias term of H(B,E|S)
        convention: Direction the bias shifts observed entropies
        flags: Notes on bins excluded from the bias sums
    """

    b_bits: float
    e_bits: float
    be_bits: float
    convention: BiasConvention = BiasConvention.STATED
    flags: list[str] = field(default_factory=list)

    @property
    def bits(self) -> float:
        """Expected shift of the observed I away from the true I."""
        return self.convention.sign * (self.b_bits + self.e_bits - self.be_bits)


def mi_bias(
    profiles: ProfileRows,
    probs: ProtocolProbabilities,
    convention: BiasConvention = BiasConvention.STATED,
) -> MIBias:
    """Bias of I(B;E|S) from the counting errors of the profiles.

    Bob's distribution comes from protocol probabilities and carries no
    error; Eve's marginal and the joint inherit the per-bin errors of every
    state's profile weighted by its sifted weight.
    """
    e_matrix, e_sigma = profile_matrix(profiles, probs)
    weights = probs.sift_weights()
    b_matrix = probs.b_matrix
    p_b, p_e, joint = sifted_distributions(weights, b_matrix, e_matrix)

    sigma_e = np.sqrt(np.einsum("i,ij->j", weights**2, e_sigma**2))
    sigma_joint = np.sqrt(np.einsum("ik,ij->kj", (weights[:, None] * b_matrix) ** 2, e_sigma**2))

    bias_b = entropy_bias(p_b, np.zeros_like(p_b))
    bias_e = entropy_bias(p_e, sigma_e)
    bias_be = entropy_bias(joint, sigma_joint)
    return MIBias(
        b_bits=bias_b.bits,
        e_bits=bias_e.bits,
        be_bits=bias_be.bits,
        convention=BiasConvention(convention),
        flags=[*bias_e.flags, *bias_be.flags],
    )


@dataclass
class PlugInEstimate:
    """Mutual information estimated from paired samples.

    Attributes:
        i_bits: Plug-in estimate
        sigma_bits: Standard error from the delta method
        bias_bits: Expected upward bias, (K_x - 1)(K_y - 1) / (2 N ln 2)
        n: Number of samples
    """

    i_bits: float
    sigma_bits: float
    bias_bits: float
    n: int


def plug_in_mutual_information(x: Sequence[int], y: Sequence[int]) -> PlugInEstimate:
    """Plug-in mutual information of two paired discrete samples.

    Raises:
        EstimatorError: If the samples are empty or of different length
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.size == 0 or x.shape != y.shape:
        raise EstimatorError("samples must be non-empty and of equal length")
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    counts = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(counts, (xi, yi), 1.0)

    n = x.size
    joint = counts / n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    occupied = joint > 0
    log_ratio = np.zeros_like(joint)
    log_ratio[occupied] = np.log2(joint[occupied] / np.outer(px, py)[occupied])
    i_bits = float(np.sum(joint * log_ratio))
    variance = max(float(np.sum(joint * log_ratio**2)) - i_bits**2, 0.0)
    bias = (px.size - 1) * (py.size - 1) / (2.0 * n * LN2)
    return PlugInEstimate(
        i_bits=max(i_bits, 0.0), sigma_bits=float(np.sqrt(variance / n)), bias_bits=bias, n=n
    )
