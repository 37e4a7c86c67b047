"""Per-channel quantum bit error rates.

Counts are written N_X^Y: detections on detector X for preparations of
state Y. Each channel compares the error detector with the correct one:

    R_QBER = N_L^R / (N_L^R + N_R^R)
    L_QBER = N_R^L / (N_R^L + N_L^L)
    H_QBER = N_V^H / (N_V^H + N_H^H)
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from lumenqkd.model import STATE_ORDER, PolarizationState
from lumenqkd.postprocess.sifting import SiftedRecords

logger = logging.getLogger(__name__)

QBER_LIMIT = 0.11

_CHANNELS = (PolarizationState.R, PolarizationState.L, PolarizationState.H)


def count_label(detector: PolarizationState, state: PolarizationState) -> str:
    return f"N_{detector.value}^{state.value}"


@dataclass
class QBERReport:
    """QBER per transmitted state.

    Attributes:
        r_qber: R channel rate, None when no R record exists
        l_qber: L channel rate, None when undefined
        h_qber: H channel rate, None when undefined
        counts: Every N_X^Y used by the three channels
        sigma: Binomial standard error per defined channel
        limit: QBER threshold for a secure key
    """

    r_qber: float | None
    l_qber: float | None
    h_qber: float | None
    counts: dict[str, int] = field(default_factory=dict)
    sigma: dict[str, float] = field(default_factory=dict)
    limit: float = QBER_LIMIT

    @property
    def channels(self) -> dict[str, float | None]:
        return {"R": self.r_qber, "L": self.l_qber, "H": self.h_qber}

    @property
    def mean_qber(self) -> float | None:
        defined = [q for q in self.channels.values() if q is not None]
        return float(np.mean(defined)) if defined else None

    @property
    def within_limit(self) -> bool:
        defined = [q for q in self.channels.values() if q is not None]
        return bool(defined) and all(q < self.limit for q in defined)

    @property
    def message(self) -> str:
        if self.mean_qber is None:
            return "QBER undefined: no sifted records"
        verdict = "below" if self.within_limit else "exceeds"
        return f"QBER {verdict} the {self.limit:.0%} limit"

    def to_dict(self) -> dict[str, object]:
        return {
            "R_QBER": self.r_qber,
            "L_QBER": self.l_qber,
            "H_QBER": self.h_qber,
            "mean_QBER": self.mean_qber,
            "sigma": dict(self.sigma),
            "counts": dict(self.counts),
            "limit": self.limit,
            "within_limit": self.within_limit,
            "message": self.message,
        }


def _rate(errors: int, correct: int) -> tuple[float | None, float | None]:
    total = errors + correct
    if total == 0:
        return None, None
    q = errors / total
    return q, float(np.sqrt(q * (1 - q) / total))


def compute_qber(records: SiftedRecords, limit: float = QBER_LIMIT) -> QBERReport:
    """Compute the R, L and H channel QBERs from sifted records.

    A channel without any record is reported as None rather than 0.
    """
    matrix = np.zeros((len(STATE_ORDER), len(STATE_ORDER)), dtype=np.int64)
    for subset in (records.key, records.parameter):
        np.add.at(
            matrix,
            (subset.alice_state.astype(np.int64), subset.detector.astype(np.int64)),
            1,
        )

    counts: dict[str, int] = {}
    rates: dict[str, float | None] = {}
    sigma: dict[str, float] = {}
    for state in _CHANNELS:
        wrong = state.orthogonal()
        n_correct = int(matrix[state.index, state.index])
        n_wrong = int(matrix[state.index, wrong.index])
        counts[count_label(state, state)] = n_correct
        counts[count_label(wrong, state)] = n_wrong
        q, s = _rate(n_wrong, n_correct)
        rates[state.value] = q
        if s is not None:
            sigma[state.value] = s
        if q is None:
            logger.warning("%s channel QBER undefined: no records", state.value)

    report = QBERReport(
        r_qber=rates["R"],
        l_qber=rates["L"],
        h_qber=rates["H"],
        counts=counts,
        sigma=sigma,
        limit=limit,
    )
    logger.info("%s (mean %s)", report.message, report.mean_qber)
    return report
