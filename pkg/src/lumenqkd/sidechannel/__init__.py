"""Side-channel analysis: mutual information between Bob and Eve, its bias and uncertainty."""

from lumenqkd.sidechannel.base import UncertaintyEstimator, UncertaintyMethod, UncertaintyResult
from lumenqkd.sidechannel.distributions import (
    ProtocolProbabilities,
    p_b_given_s,
    p_e_given_s,
    p_joint_be_given_s,
    profile_matrix,
    protocol_from_config,
)
from lumenqkd.sidechannel.entropy import BiasConvention, EntropyBias, entropy, entropy_bias
from lumenqkd.sidechannel.montecarlo import MonteCarloEstimator, mi_uncertainty_montecarlo
from lumenqkd.sidechannel.mutual_info import (
    MIBias,
    MutualInformation,
    PlugInEstimate,
    mi_bias,
    mutual_information,
    plug_in_mutual_information,
)
from lumenqkd.sidechannel.propagation import (
    PropagationEstimator,
    mi_uncertainty_propagation,
    propagate_uncertainty,
)
from lumenqkd.sidechannel.report import MIReport, analyze_side_channel

__all__ = [
    "BiasConvention",
    "EntropyBias",
    "MIBias",
    "MIReport",
    "MonteCarloEstimator",
    "MutualInformation",
    "PlugInEstimate",
    "PropagationEstimator",
    "ProtocolProbabilities",
    "UncertaintyEstimator",
    "UncertaintyMethod",
    "UncertaintyResult",
    "analyze_side_channel",
    "entropy",
    "entropy_bias",
    "mi_bias",
    "mi_uncertainty_montecarlo",
    "mi_uncertainty_propagation",
    "mutual_information",
    "p_b_given_s",
    "p_e_given_s",
    "p_joint_be_given_s",
    "plug_in_mutual_information",
    "profile_matrix",
    "propagate_uncertainty",
    "protocol_from_config",
]
