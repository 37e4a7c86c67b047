"""Decoy-state statistics: gains, the single-photon yield bound and a tamper check.

The gain of an intensity class is the fraction of its slots that produced
at least one click, before sifting. The vacuum gain estimates the
background yield Y0. The single-photon yield lower bound is the standard
two-intensity linear estimate, generalised to any photon-number
distribution P_mu(n) whose ratio P_nu(n)/P_mu(n) falls with n for nu < mu
(true for both Poisson and thermal sources):

    Y1 >= [P_mu(2) (Q_nu - P_nu(0) Y0) - P_nu(2) (Q_mu - P_mu(0) Y0)]
          / (P_mu(2) P_nu(1) - P_nu(2) P_mu(1))

The multiphoton fraction of the signal gain is then bounded by
1 - (P_mu(0) Y0 + P_mu(1) Y1) / Q_mu.

Observed gains are compared with the gains predicted from the configured
channel and detectors; a class deviating by more than VERDICT_Z standard
errors marks the session as inconsistent, the signature of an
eavesdropper reshaping the photon-number distribution.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.config import SessionConfig
from lumenqkd.exceptions import EstimatorError
from lumenqkd.model import INTENSITY_ORDER, IntensityClass, PhotonStatistics
from lumenqkd.postprocess.announcements import PublicAnnouncement
from lumenqkd.postprocess.sifting import PairedDetections, SiftedRecords
from lumenqkd.receiver import NUM_DETECTORS
from lumenqkd.transmitter.photons import photon_number_pmf

logger = logging.getLogger(__name__)

VERDICT_Z = 5.0


@dataclass
class IntensityStatistics:
    """Counts and rates of one intensity class."""

    intensity: IntensityClass
    sent: int
    clicked: int
    gain: float
    gain_sigma: float
    sifted_gain: float
    error_rate: float | None
    expected_gain: float
    z_score: float

    def to_dict(self) -> dict[str, object]:
        return {
            "sent": self.sent,
            "clicked": self.clicked,
            "gain": self.gain,
            "gain_sigma": self.gain_sigma,
            "sifted_gain": self.sifted_gain,
            "error_rate": self.error_rate,
            "expected_gain": self.expected_gain,
            "z_score": self.z_score,
        }


@dataclass
class DecoyReport:
    """Decoy-state analysis of a session.

    Attributes:
        classes: Statistics per intensity class
        y0: Background yield (vacuum gain)
        y1_lower: Lower bound on the single-photon yield
        multiphoton_fraction: Upper bound on the multiphoton share of the signal gain
        consistent: True when every gain matches its expectation
        flags: Notes on clamped or non-physical estimates
    """

    classes: dict[IntensityClass, IntensityStatistics]
    y0: float
    y1_lower: float
    multiphoton_fraction: float
    consistent: bool
    flags: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.consistent:
            return "gains consistent with the channel model"
        return "gains deviate from the channel model: possible eavesdropper"

    def to_dict(self) -> dict[str, object]:
        return {
            "classes": {c.value: s.to_dict() for c, s in self.classes.items()},
            "Y0": self.y0,
            "Y1_lower": self.y1_lower,
            "multiphoton_fraction": self.multiphoton_fraction,
            "consistent": self.consistent,
            "verdict": self.verdict,
            "flags": list(self.flags),
        }


def single_photon_yield_bound(
    q_signal: float,
    q_decoy: float,
    y0: float,
    mu_signal: float,
    mu_decoy: float,
    statistics: PhotonStatistics,
) -> float:
    """Two-intensity lower bound on the single-photon yield (may be negative).

    Raises:
        EstimatorError: If the intensities do not give a positive denominator
    """
    p_mu = photon_number_pmf(mu_signal, statistics, np.arange(3))
    p_nu = photon_number_pmf(mu_decoy, statistics, np.arange(3))
    denominator = p_mu[2] * p_nu[1] - p_nu[2] * p_mu[1]
    if denominator <= 0:
        raise EstimatorError("decoy intensity must be strictly below the signal intensity")
    numerator = p_mu[2] * (q_decoy - p_nu[0] * y0) - p_nu[2] * (q_signal - p_mu[0] * y0)
    return float(numerator / denominator)


def _no_click_probability(mu: float, transmission: float, statistics: PhotonStatistics) -> float:
    x = mu * transmission
    if statistics is PhotonStatistics.THERMAL:
        return 1.0 / (1.0 + x)
    return float(np.exp(-x))


def expected_gains(config: SessionConfig) -> dict[IntensityClass, float]:
    """Per-slot click probability of each intensity class under the configured model."""
    noise_rate = (config.dark_rate + config.background_rate) * NUM_DETECTORS
    y0 = -np.expm1(-noise_rate * config.slot_period)
    transmission = config.channel_transmissivity * config.detector_efficiency
    return {
        intensity: float(
            1.0
            - (1.0 - y0)
            * _no_click_probability(
                config.mean_photon_number(intensity), transmission, config.photon_statistics
            )
        )
        for intensity in INTENSITY_ORDER
    }


def decoy_statistics(
    paired: PairedDetections,
    announcements: PublicAnnouncement,
    config: SessionConfig,
    sifted: SiftedRecords | None = None,
) -> DecoyReport:
    """Gains, yields and the consistency verdict for one session.

    Args:
        paired: Detections matched to slots (before sifting)
        announcements: Public intensity record of every slot
        config: Session configuration supplying mu and the channel model
        sifted: Sifted records for sifted gains and error rates

    Returns:
        DecoyReport

    Raises:
        EstimatorError: If an intensity class was never sent
    """
    intensity = announcements.intensity.astype(np.int64)
    sent = np.bincount(intensity, minlength=len(INTENSITY_ORDER))
    if np.any(sent == 0):
        missing = [INTENSITY_ORDER[i].value for i in np.flatnonzero(sent == 0)]
        raise EstimatorError(f"no slots sent for intensity class(es) {missing}")

    clicked = np.bincount(intensity[paired.clicked_slots], minlength=len(INTENSITY_ORDER))

    sifted_counts = np.zeros(len(INTENSITY_ORDER), dtype=np.int64)
    error_counts = np.zeros(len(INTENSITY_ORDER), dtype=np.int64)
    if sifted is not None:
        for subset in (sifted.key, sifted.parameter, sifted.background):
            np.add.at(sifted_counts, subset.intensity.astype(np.int64), 1)
        for subset in (sifted.key, sifted.parameter):
            np.add.at(error_counts, subset.intensity[subset.errors].astype(np.int64), 1)

    expected = expected_gains(config)
    classes: dict[IntensityClass, IntensityStatistics] = {}
    consistent = True
    for i, cls in enumerate(INTENSITY_ORDER):
        gain = clicked[i] / sent[i]
        expectation = expected[cls]
        sigma = float(np.sqrt(expectation * (1 - expectation) / sent[i]))
        if sigma > 0:
            z = (gain - expectation) / sigma
        else:
            z = 0.0 if gain == expectation else float("inf")
        consistent &= bool(abs(z) <= VERDICT_Z)
        n_sifted = int(sifted_counts[i])
        error_rate = None
        if sifted is not None and cls is not IntensityClass.VACUUM and n_sifted:
            error_rate = float(error_counts[i] / n_sifted)
        classes[cls] = IntensityStatistics(
            intensity=cls,
            sent=int(sent[i]),
            clicked=int(clicked[i]),
            gain=float(gain),
            gain_sigma=float(np.sqrt(gain * (1 - gain) / sent[i])),
            sifted_gain=n_sifted / int(sent[i]),
            error_rate=error_rate,
            expected_gain=expectation,
            z_score=float(z),
        )

    flags: list[str] = []
    y0 = classes[IntensityClass.VACUUM].gain
    q_signal = classes[IntensityClass.SIGNAL].gain
    y1 = single_photon_yield_bound(
        q_signal,
        classes[IntensityClass.DECOY].gain,
        y0,
        config.mu_signal,
        config.mu_decoy,
        config.photon_statistics,
    )
    if y1 < 0:
        flags.append(f"single-photon yield bound {y1:.3e} is negative; clamped to 0")
        y1 = 0.0

    p_mu = photon_number_pmf(config.mu_signal, config.photon_statistics, np.arange(2))
    if q_signal > 0:
        multiphoton = 1.0 - (p_mu[0] * y0 + p_mu[1] * y1) / q_signal
        multiphoton = float(np.clip(multiphoton, 0.0, 1.0))
    else:
        flags.append("signal gain is zero; multiphoton fraction undefined")
        multiphoton = 1.0

    if not consistent:
        logger.warning("Decoy gains inconsistent with the channel model")
    logger.info("Decoy: Y0=%.3e, Y1>=%.3e, multiphoton<=%.4f", y0, y1, multiphoton)
    return DecoyReport(
        classes=classes,
        y0=float(y0),
        y1_lower=float(y1),
        multiphoton_fraction=multiphoton,
        consistent=consistent,
        flags=flags,
    )
