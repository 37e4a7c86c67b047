"""Protocol probabilities and the sifted distributions of Bob's and Eve's outcomes.

With w_i = p(S|A_i) p(A_i) / sum_l p(S|A_l) p(A_l) the sifted weight of
state i, Bob's outcome B, Eve's side-channel bin E and their joint are

    p(B_k|S)     = sum_i w_i p(B_k|A_i,S)
    p(E_j|S)     = sum_i w_i p(E_j|A_i)
    p(B_k,E_j|S) = sum_i w_i p(B_k|A_i,S) p(E_j|A_i)

Eve's distribution depends on Alice's state only, and Bob's outcome is
fixed by Alice's state and the channel, so B and E are independent given A.
"""

from collections.abc import Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from lumenqkd.config import SessionConfig
from lumenqkd.exceptions import ConfigurationError, EstimatorError, ProfileError
from lumenqkd.model import LEGAL_CLASSES, PolarizationState
from lumenqkd.postprocess.decoy import expected_gains
from lumenqkd.sidechannel.entropy import NORMALIZATION_TOLERANCE
from lumenqkd.transmitter.profiles import SourceProfile
from lumenqkd.transmitter.selection import sending_probability_array

ProfileRows = Sequence[SourceProfile | None]

KEY_OUTCOMES = ("0", "1")


class ProtocolProbabilities(BaseModel):
    """Sending, sifting and sorting probabilities of every prepared state.

    Row i of every field describes state i; ``labels`` names the states and
    ``outcomes`` names Bob's sifted outcomes.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    p_a: list[float] = Field(description="Sending probability per state")
    p_s_given_a: list[float] = Field(description="Probability that a state is sifted")
    p_b_given_as: list[list[float]] = Field(description="Bob's sifted outcome per state")
    labels: list[str] | None = Field(default=None, description="State names")
    outcomes: list[str] | None = Field(default=None, description="Outcome names")

    @model_validator(mode="after")
    def validate_shapes(self) -> "ProtocolProbabilities":
        n = len(self.p_a)
        if n == 0:
            raise ValueError("at least one state is required")
        if len(self.p_s_given_a) != n or len(self.p_b_given_as) != n:
            raise ValueError("p_a, p_s_given_a and p_b_given_as must list the same states")
        if any(p < 0 for p in self.p_a) or abs(sum(self.p_a) - 1) > NORMALIZATION_TOLERANCE:
            raise ValueError("p_a must be a probability distribution")
        if any(not 0 <= p <= 1 for p in self.p_s_given_a):
            raise ValueError("p_s_given_a entries must lie in [0, 1]")
        widths = {len(row) for row in self.p_b_given_as}
        if len(widths) != 1 or 0 in widths:
            raise ValueError("every p_b_given_as row must have the same non-zero length")
        for i, row in enumerate(self.p_b_given_as):
            if any(p < 0 for p in row) or abs(sum(row) - 1) > NORMALIZATION_TOLERANCE:
                raise ValueError(f"p_b_given_as row {i} must be a probability distribution")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels must name every state")
        if self.outcomes is not None and len(self.outcomes) != widths.pop():
            raise ValueError("outcomes must name every column of p_b_given_as")
        return self

    @property
    def n_states(self) -> int:
        return len(self.p_a)

    @property
    def n_outcomes(self) -> int:
        return len(self.p_b_given_as[0])

    @property
    def b_matrix(self) -> np.ndarray:
        return np.asarray(self.p_b_given_as, dtype=float)

    def sift_weights(self) -> np.ndarray:
        """Normalised p(S|A_i) p(A_i).

        Raises:
            EstimatorError: If no state is ever sifted
        """
        joint = np.asarray(self.p_s_given_a, dtype=float) * np.asarray(self.p_a, dtype=float)
        total = joint.sum()
        if total <= 0:
            raise EstimatorError("no state is ever sifted: sum of p(S|A) p(A) is zero")
        return joint / total

    @classmethod
    def uniform(cls, n_states: int) -> "ProtocolProbabilities":
        """Equal priors, every state sifted, each state mapped to its own outcome."""
        return cls(
            p_a=[1.0 / n_states] * n_states,
            p_s_given_a=[1.0] * n_states,
            p_b_given_as=np.eye(n_states).tolist(),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ProtocolProbabilities":
        """Read a protocol-probability JSON file.

        Raises:
            ConfigurationError: If the file is unreadable or invalid
        """
        try:
            return cls.model_validate_json(Path(path).read_text())
        except OSError as e:
            raise ConfigurationError(f"Cannot read protocol file '{path}': {e}") from e
        except ValidationError as e:
            raise ConfigurationError(f"Invalid protocol file '{path}': {e}") from e

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(self.model_dump_json(indent=2) + "\n")


def profile_matrix(
    profiles: ProfileRows, probs: ProtocolProbabilities
) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-state pdfs and their standard errors into (states x bins) matrices.

    States with zero sifted weight may have no profile; their rows are zero.

    Raises:
        ProfileError: If a sifted state lacks a profile or binnings differ
    """
    if len(profiles) != probs.n_states:
        raise ProfileError(f"expected {probs.n_states} profiles, got {len(profiles)}")
    weights = probs.sift_weights()
    reference = None
    for i, profile in enumerate(profiles):
        if profile is None:
            if weights[i] > 0:
                raise ProfileError(f"state {i} is sifted but has no profile")
            continue
        if reference is None:
            reference = profile
        elif not reference.same_binning(profile):
            raise ProfileError(f"profile of state {i} does not share the common binning")
    if reference is None:
        raise ProfileError("no profiles given")

    pdf = np.zeros((probs.n_states, reference.pdf.size))
    sigma = np.zeros_like(pdf)
    for i, profile in enumerate(profiles):
        if profile is not None:
            pdf[i] = profile.pdf
            sigma[i] = profile.sigma
    return pdf, sigma


def sifted_distributions(
    weights: np.ndarray, b_matrix: np.ndarray, e_matrix: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(p(B|S), p(E|S), p(B,E|S)) from sifted weights and per-state matrices."""
    p_b = weights @ b_matrix
    p_e = weights @ e_matrix
    joint = np.einsum("i,ik,ij->kj", weights, b_matrix, e_matrix)
    return p_b, p_e, joint


def p_b_given_s(probs: ProtocolProbabilities) -> np.ndarray:
    """Distribution of Bob's sifted outcomes."""
    return probs.sift_weights() @ probs.b_matrix


def p_e_given_s(profiles: ProfileRows, probs: ProtocolProbabilities) -> np.ndarray:
    """Distribution of Eve's side-channel bin over sifted events."""
    e_matrix, _ = profile_matrix(profiles, probs)
    return probs.sift_weights() @ e_matrix


def p_joint_be_given_s(profiles: ProfileRows, probs: ProtocolProbabilities) -> np.ndarray:
    """Joint distribution of Bob's outcome (rows) and Eve's bin (columns)."""
    e_matrix, _ = profile_matrix(profiles, probs)
    return sifted_distributions(probs.sift_weights(), probs.b_matrix, e_matrix)[2]


def protocol_from_config(config: SessionConfig) -> ProtocolProbabilities:
    """Key-basis protocol probabilities for the configured session.

    Rows follow the state codes 0..6. Only R and L preparations measured in
    the L/R basis are sifted into the key: p(S|A) is half the click
    probability of the state's intensity class. Bob's outcome is the key
    bit (R -> 0, L -> 1), flipped with the state's polarization error.
    """
    p_a = sending_probability_array(config.selection_thresholds)
    gains = expected_gains(config)

    p_s, p_b, labels = [], [], []
    for prep in LEGAL_CLASSES:
        labels.append(prep.label)
        if prep.state in (PolarizationState.R, PolarizationState.L):
            p_s.append(0.5 * gains[prep.intensity])
            eps = config.error_prob(prep.state)
            p_b.append([1 - eps, eps] if prep.state is PolarizationState.R else [eps, 1 - eps])
        else:
            p_s.append(0.0)
            p_b.append([0.5, 0.5])

    return ProtocolProbabilities(
        p_a=p_a.tolist(),
        p_s_given_a=p_s,
        p_b_given_as=p_b,
        labels=labels,
        outcomes=list(KEY_OUTCOMES),
    )
