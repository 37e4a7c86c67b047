"""Monte-Carlo uncertainty of the mutual information.

Each trial redraws every bin count from a Poisson distribution with the
observed count as its mean, renormalises the profiles and recomputes
I(B;E|S). The spread of the trial values is the uncertainty. Trial k
always uses the k-th child of one SeedSequence, so results do not depend
on the number of worker processes.
"""

import logging
import multiprocessing
from functools import partial

import numpy as np

from lumenqkd.exceptions import EstimatorError
from lumenqkd.sidechannel.base import UncertaintyEstimator, UncertaintyMethod, UncertaintyResult
from lumenqkd.sidechannel.distributions import ProfileRows, ProtocolProbabilities, profile_matrix
from lumenqkd.sidechannel.mutual_info import mi_from_matrices

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
HISTOGRAM_BINS = 50


def _mi_trial(
    seed: np.random.SeedSequence,
    counts: np.ndarray,
    resample: np.ndarray,
    weights: np.ndarray,
    b_matrix: np.ndarray,
) -> float:
    rng = np.random.default_rng(seed)
    drawn = counts.copy()
    drawn[resample] = rng.poisson(counts[resample])
    totals = drawn.sum(axis=1, keepdims=True)
    # A row that lost every count keeps its observed shape.
    empty = totals[:, 0] <= 0
    drawn[empty] = counts[empty]
    totals[empty] = counts[empty].sum(axis=1, keepdims=True)
    rows = np.divide(drawn, totals, out=np.zeros_like(drawn), where=totals > 0)
    return mi_from_matrices(weights, b_matrix, rows, validate=False).i_bits


def _seed_sequence(rng: np.random.Generator | int | None) -> np.random.SeedSequence:
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(0, 2**63)))
    return np.random.SeedSequence(rng)


def mi_uncertainty_montecarlo(
    profiles: ProfileRows,
    probs: ProtocolProbabilities,
    n_samples: int = 1000,
    rng: np.random.Generator | int | None = 0,
    workers: int | None = None,
    bins: int = HISTOGRAM_BINS,
) -> UncertaintyResult:
    """Monte-Carlo uncertainty of I(B;E|S).

    Args:
        profiles: Per-state profiles aligned with the protocol rows
        probs: Protocol probabilities
        n_samples: Number of trials, at least 100
        rng: Seed or generator fixing every trial
        workers: Worker processes; trials run in-process when None or 1
        bins: Number of histogram bins of the trial values

    Returns:
        UncertaintyResult with the trial values and their histogram

    Raises:
        EstimatorError: If fewer than 100 trials are requested
    """
    if n_samples < MIN_SAMPLES:
        raise EstimatorError(f"at least {MIN_SAMPLES} Monte-Carlo samples are required")

    e_matrix, _ = profile_matrix(profiles, probs)
    weights = probs.sift_weights()
    counts = np.zeros_like(e_matrix)
    resample = np.zeros(e_matrix.shape[0], dtype=bool)
    for i, profile in enumerate(profiles):
        if profile is None:
            continue
        if profile.exact or weights[i] == 0:
            counts[i] = profile.pdf
        else:
            counts[i] = profile.counts
            resample[i] = True

    seeds = _seed_sequence(rng).spawn(n_samples)
    trial = partial(
        _mi_trial, counts=counts, resample=resample, weights=weights, b_matrix=probs.b_matrix
    )
    if workers is not None and workers > 1:
        with multiprocessing.Pool(workers) as pool:
            chunk = max(1, n_samples // (4 * workers))
            samples = np.fromiter(pool.imap(trial, seeds, chunksize=chunk), float, n_samples)
    else:
        samples = np.fromiter(map(trial, seeds), float, n_samples)

    sigma = float(samples.std(ddof=1)) if resample.any() else 0.0
    histogram = np.histogram(samples, bins=bins)
    logger.info(
        "Monte-Carlo over %d trials: mean %.4g bits, sigma %.4g bits",
        n_samples,
        samples.mean(),
        sigma,
    )
    return UncertaintyResult(
        method=UncertaintyMethod.MONTE_CARLO,
        sigma_bits=sigma,
        samples=samples,
        histogram=histogram,
        details={"n_samples": n_samples, "mean_bits": float(samples.mean())},
    )


class MonteCarloEstimator(UncertaintyEstimator):
    """Uncertainty by Poisson resampling of the profile counts."""

    method = UncertaintyMethod.MONTE_CARLO

    def __init__(
        self,
        n_samples: int = 1000,
        seed: int | None = 0,
        workers: int | None = None,
    ):
        self.n_samples = n_samples
        self.seed = seed
        self.workers = workers

    def estimate(self, profiles: ProfileRows, probs: ProtocolProbabilities) -> UncertaintyResult:
        return mi_uncertainty_montecarlo(
            profiles, probs, n_samples=self.n_samples, rng=self.seed, workers=self.workers
        )
