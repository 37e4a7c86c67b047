"""Post-processing: tag unwrapping, clock recovery, sifting, QBER and decoy analysis."""

from lumenqkd.postprocess.announcements import PublicAnnouncement, announce
from lumenqkd.postprocess.decoy import (
    DecoyReport,
    IntensityStatistics,
    decoy_statistics,
    expected_gains,
    single_photon_yield_bound,
)
from lumenqkd.postprocess.qber import QBER_LIMIT, QBERReport, compute_qber
from lumenqkd.postprocess.sifting import (
    PairedDetections,
    RecordSet,
    SiftedRecord,
    SiftedRecords,
    pair_detections,
    sift,
)
from lumenqkd.postprocess.sync import SyncResult, SyncSettings, assign_slots, recover_clock_offset
from lumenqkd.postprocess.unwrap import UnwrapResult, unwrap_tags

__all__ = [
    "QBER_LIMIT",
    "DecoyReport",
    "IntensityStatistics",
    "PairedDetections",
    "PublicAnnouncement",
    "QBERReport",
    "RecordSet",
    "SiftedRecord",
    "SiftedRecords",
    "SyncResult",
    "SyncSettings",
    "UnwrapResult",
    "announce",
    "assign_slots",
    "compute_qber",
    "decoy_statistics",
    "expected_gains",
    "pair_detections",
    "recover_clock_offset",
    "sift",
    "single_photon_yield_bound",
    "unwrap_tags",
]
