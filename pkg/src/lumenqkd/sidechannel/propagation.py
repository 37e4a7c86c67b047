"""First-order propagation of per-bin errors, sigma_f^2 = sum (df/dx_i)^2 sigma_i^2.

Derivatives come from finite differences with step max(1e-6, 0.01 sigma_i);
a forward difference replaces the central one when the backward step would
leave the non-negative domain. The linearisation holds when the relative
bin errors are small, as for well-sampled temporal profiles.
"""

import logging
from collections.abc import Callable

import numpy as np

from lumenqkd.exceptions import EstimatorError
from lumenqkd.sidechannel.base import UncertaintyEstimator, UncertaintyMethod, UncertaintyResult
from lumenqkd.sidechannel.distributions import ProfileRows, ProtocolProbabilities, profile_matrix
from lumenqkd.sidechannel.mutual_info import mi_from_matrices

logger = logging.getLogger(__name__)

MIN_STEP = 1e-6
STEP_FRACTION = 0.01


def propagate_uncertainty(
    f: Callable[[np.ndarray], float], x: np.ndarray, sigma: np.ndarray
) -> float:
    """Propagate independent errors of ``x`` through ``f``.

    Variables with zero error are skipped.

    Raises:
        EstimatorError: If a step vanishes against the value it perturbs
    """
    x = np.asarray(x, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float).ravel()
    if x.shape != sigma.shape:
        raise EstimatorError("x and sigma must have the same shape")

    f0 = f(x)
    variance = 0.0
    for i in np.flatnonzero(sigma > 0):
        h = max(MIN_STEP, STEP_FRACTION * sigma[i])
        if x[i] + h == x[i]:
            raise EstimatorError(f"finite-difference step {h:.3g} underflows at x[{i}]={x[i]:.3g}")
        up = x.copy()
        up[i] += h
        if x[i] - h < 0:
            derivative = (f(up) - f0) / h
        else:
            down = x.copy()
            down[i] -= h
            derivative = (f(up) - f(down)) / (2 * h)
        variance += (derivative * sigma[i]) ** 2
    return float(np.sqrt(variance))


def mi_uncertainty_propagation(
    profiles: ProfileRows, probs: ProtocolProbabilities, sigmas: np.ndarray | None = None
) -> float:
    """Propagated uncertainty of I(B;E|S) in bits.

    Every perturbed profile is renormalised before the mutual information
    is recomputed.

    Args:
        profiles: Per-state profiles aligned with the protocol rows
        probs: Protocol probabilities
        sigmas: Per-state, per-bin errors; counting errors of the profiles when None
    """
    e_matrix, e_sigma = profile_matrix(profiles, probs)
    if sigmas is not None:
        e_sigma = np.asarray(sigmas, dtype=float).reshape(e_matrix.shape)
    weights = probs.sift_weights()
    b_matrix = probs.b_matrix
    shape = e_matrix.shape

    # Rows without weight cannot move I.
    e_sigma = np.where(weights[:, None] > 0, e_sigma, 0.0)

    def mi_of(flat: np.ndarray) -> float:
        rows = flat.reshape(shape)
        totals = rows.sum(axis=1, keepdims=True)
        rows = np.divide(rows, totals, out=np.zeros_like(rows), where=totals > 0)
        return mi_from_matrices(weights, b_matrix, rows, validate=False).i_bits

    sigma = propagate_uncertainty(mi_of, e_matrix, e_sigma)
    logger.debug("Propagated sigma over %d bins: %.4g bits", int(np.count_nonzero(e_sigma)), sigma)
    return sigma


class PropagationEstimator(UncertaintyEstimator):
    """Uncertainty by first-order error propagation."""

    method = UncertaintyMethod.PROPAGATION

    def estimate(self, profiles: ProfileRows, probs: ProtocolProbabilities) -> UncertaintyResult:
        return UncertaintyResult(
            method=self.method, sigma_bits=mi_uncertainty_propagation(profiles, probs)
        )
