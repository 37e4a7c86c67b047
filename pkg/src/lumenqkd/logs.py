"""Artifact formats: event logs, reports and the run manifest.

Event logs and histograms are CSV files whose first line is
``# run: <run_id>``, naming the manifest that produced them. Reports are
JSON. The preparation log can also be written as a packed binary file
holding ten 3-bit state codes per little-endian 32-bit word, preceded by
the number of slots as a little-endian 64-bit integer.
"""

import hashlib
import json
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from lumenqkd import __version__
from lumenqkd.exceptions import ConfigurationError
from lumenqkd.model import INTENSITY_ORDER, NUM_CODES, SideChannelAxis
from lumenqkd.postprocess.announcements import PublicAnnouncement
from lumenqkd.receiver import NUM_DETECTORS

logger = logging.getLogger(__name__)

PREPARATION_HEADER = "slot_index,state_code"
ANNOUNCEMENT_HEADER = "slot_index,basis,intensity"
DETECTION_HEADER = "detector,raw_tag"
EVE_HEADER = "slot_index,axis,bin_index"
TRUTH_HEADER = "true_time_ps,slot_index"
COUNT_RATE_HEADER = "bin_start_s,H,V,L,R"
KEY_HEADER = "bit"

CODES_PER_WORD = 10
_CODE_SHIFTS = np.arange(CODES_PER_WORD, dtype=np.uint32) * 3
_BASIS_NAMES = ("HV", "LR")
_NO_BASIS = "none"
_CHUNK_ROWS = 1 << 20


class RunManifest(BaseModel):
    """Provenance of one command invocation.

    The run id is a digest of the command, configuration, seed and inputs,
    so repeating a run reproduces its id and every output byte.
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    config_path: str | None = None
    config: dict[str, Any] = Field(default_factory=dict)
    parameters: dict[str, Any] = Field(default_factory=dict)
    input_digests: dict[str, str] = Field(default_factory=dict)
    rng_seed: int | None = None
    tool_version: str = __version__
    outputs: list[str] = Field(default_factory=list)

    @property
    def run_id(self) -> str:
        payload = json.dumps(
            {
                "command": self.command,
                "config": self.config,
                "parameters": self.parameters,
                "inputs": self.input_digests,
                "seed": self.rng_seed,
                "version": self.tool_version,
            },
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def write(self, path: str | Path) -> None:
        data = self.model_dump(mode="json")
        data["run_id"] = self.run_id
        write_json(path, data)

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        data = read_json(path)
        data.pop("run_id", None)
        return cls.model_validate(data)


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_json(path: str | Path, data: dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def read_json(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read JSON file '{path}': {e}") from e


def _write_rows(path: str | Path, header: str, rows: Iterable[str], run_id: str | None) -> None:
    with open(path, "w", newline="") as f:
        if run_id:
            f.write(f"# run: {run_id}\n")
        f.write(header + "\n")
        for block in rows:
            f.write(block)
    logger.debug("Wrote %s", path)


def _int_blocks(*columns: np.ndarray) -> Iterable[str]:
    n = columns[0].size
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        parts = [col[start:stop].astype(np.int64).astype(str) for col in columns]
        lines = parts[0]
        for part in parts[1:]:
            lines = np.char.add(np.char.add(lines, ","), part)
        yield "\n".join(lines.tolist()) + "\n"


def _read_table(path: str | Path, header: str) -> list[list[str]]:
    """Rows of a headed CSV file, skipping '#' lines.

    Raises:
        ConfigurationError: If the file is missing or the header differs
    """
    try:
        with open(path) as f:
            lines = [line.strip() for line in f if line.strip() and not line.startswith("#")]
    except OSError as e:
        raise ConfigurationError(f"Cannot read log '{path}': {e}") from e
    if not lines or lines[0] != header:
        raise ConfigurationError(f"Log '{path}' must start with header '{header}'")
    return [line.split(",") for line in lines[1:]]


def _int_table(path: str | Path, header: str, n_cols: int) -> np.ndarray:
    rows = _read_table(path, header)
    try:
        table = np.array(rows, dtype=np.int64).reshape(len(rows), n_cols)
    except ValueError as e:
        raise ConfigurationError(f"Log '{path}' has a malformed row: {e}") from e
    return table


def read_run_id(path: str | Path) -> str | None:
    """Run id from the first line of a log, if present."""
    with open(path) as f:
        first = f.readline()
    if first.startswith("# run:"):
        return first.split(":", 1)[1].strip()
    return None


def write_preparation_log(path: str | Path, codes: np.ndarray, run_id: str | None = None) -> None:
    codes = np.asarray(codes)
    _write_rows(path, PREPARATION_HEADER, _int_blocks(np.arange(codes.size), codes), run_id)


def read_preparation_log(path: str | Path) -> np.ndarray:
    """State code per slot.

    Raises:
        ConfigurationError: If slots are not numbered 0..n-1 or a code is invalid
    """
    table = _int_table(path, PREPARATION_HEADER, 2)
    if not np.array_equal(table[:, 0], np.arange(table.shape[0])):
        raise ConfigurationError(f"Preparation log '{path}' must list slots 0..n-1 in order")
    codes = table[:, 1]
    if codes.size and (codes.min() < 0 or codes.max() >= NUM_CODES):
        raise ConfigurationError(f"Preparation log '{path}' holds reserved or invalid codes")
    return codes.astype(np.uint8)


def pack_codes(codes: np.ndarray) -> np.ndarray:
    """Pack 3-bit codes ten to a 32-bit word, first code in the lowest bits."""
    codes = np.asarray(codes, dtype=np.uint32)
    padded = np.zeros(-(-codes.size // CODES_PER_WORD) * CODES_PER_WORD, dtype=np.uint32)
    padded[: codes.size] = codes
    return (padded.reshape(-1, CODES_PER_WORD) << _CODE_SHIFTS).sum(axis=1, dtype=np.uint32)


def unpack_codes(words: np.ndarray, n_codes: int) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint32)
    codes = (words[:, None] >> _CODE_SHIFTS) & np.uint32(7)
    return codes.ravel()[:n_codes].astype(np.uint8)


def write_packed_preparation_log(path: str | Path, codes: np.ndarray) -> None:
    codes = np.asarray(codes)
    with open(path, "wb") as f:
        f.write(np.array([codes.size], dtype="<u8").tobytes())
        f.write(pack_codes(codes).astype("<u4").tobytes())


def read_packed_preparation_log(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ConfigurationError(f"Packed log '{path}' is truncated")
    n_codes = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    words = np.frombuffer(raw[8:], dtype="<u4")
    if words.size * CODES_PER_WORD < n_codes:
        raise ConfigurationError(f"Packed log '{path}' is truncated")
    return unpack_codes(words, n_codes)


def write_announcements(
    path: str | Path, announcements: PublicAnnouncement, run_id: str | None = None
) -> None:
    basis_names = np.array([*_BASIS_NAMES, _NO_BASIS])
    intensity_names = np.array([c.value for c in INTENSITY_ORDER])
    basis = basis_names[announcements.basis.astype(np.int64)]
    intensity = intensity_names[announcements.intensity.astype(np.int64)]

    def blocks() -> Iterable[str]:
        n = len(announcements)
        for start in range(0, n, _CHUNK_ROWS):
            stop = min(start + _CHUNK_ROWS, n)
            slots = np.arange(start, stop).astype(str)
            lines = np.char.add(np.char.add(slots, ","), basis[start:stop])
            lines = np.char.add(np.char.add(lines, ","), intensity[start:stop])
            yield "\n".join(lines.tolist()) + "\n"

    _write_rows(path, ANNOUNCEMENT_HEADER, blocks(), run_id)


def read_announcements(path: str | Path) -> PublicAnnouncement:
    rows = _read_table(path, ANNOUNCEMENT_HEADER)
    basis_index = {name: i for i, name in enumerate(_BASIS_NAMES)} | {_NO_BASIS: -1}
    intensity_index = {c.value: i for i, c in enumerate(INTENSITY_ORDER)}
    basis = np.empty(len(rows), dtype=np.int8)
    intensity = np.empty(len(rows), dtype=np.int8)
    try:
        for i, (slot, b, s) in enumerate(rows):
            if int(slot) != i:
                raise ConfigurationError(f"Announcements '{path}' must list slots 0..n-1")
            basis[i] = basis_index[b]
            intensity[i] = intensity_index[s]
    except (KeyError, ValueError) as e:
        raise ConfigurationError(f"Announcements '{path}' has a malformed row: {e}") from e
    try:
        return PublicAnnouncement(basis=basis, intensity=intensity)
    except ValueError as e:
        raise ConfigurationError(f"Announcements '{path}': {e}") from e


def write_detection_log(
    path: str | Path, detectors: np.ndarray, raw_tags: np.ndarray, run_id: str | None = None
) -> None:
    _write_rows(path, DETECTION_HEADER, _int_blocks(detectors, raw_tags), run_id)


def read_detection_log(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """(detectors, raw tags) in arrival order."""
    table = _int_table(path, DETECTION_HEADER, 2)
    if table.size and (table[:, 0].min() < 0 or table[:, 0].max() >= NUM_DETECTORS):
        raise ConfigurationError(f"Detection log '{path}' has an invalid detector index")
    return table[:, 0].astype(np.int8), table[:, 1]


def write_truth_log(
    path: str | Path, true_time_ps: np.ndarray, slot_index: np.ndarray, run_id: str | None = None
) -> None:
    _write_rows(path, TRUTH_HEADER, _int_blocks(true_time_ps, slot_index), run_id)


def read_truth_log(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    table = _int_table(path, TRUTH_HEADER, 2)
    return table[:, 0], table[:, 1]


def write_eve_log(
    path: str | Path, eve_bins: np.ndarray, axis: SideChannelAxis, run_id: str | None = None
) -> None:
    """Eve's bin for every non-vacuum slot."""
    eve_bins = np.asarray(eve_bins)
    slots = np.flatnonzero(eve_bins >= 0)
    axis_name = SideChannelAxis(axis).value

    def blocks() -> Iterable[str]:
        for start in range(0, slots.size, _CHUNK_ROWS):
            chunk = slots[start : start + _CHUNK_ROWS]
            lines = np.char.add(chunk.astype(str), f",{axis_name},")
            lines = np.char.add(lines, eve_bins[chunk].astype(np.int64).astype(str))
            yield "\n".join(lines.tolist()) + "\n"

    _write_rows(path, EVE_HEADER, blocks(), run_id)


def read_eve_log(path: str | Path, n_slots: int) -> tuple[np.ndarray, SideChannelAxis | None]:
    """Eve's bin per slot (-1 where absent) and the axis she measured."""
    rows = _read_table(path, EVE_HEADER)
    bins = np.full(n_slots, -1, dtype=np.int32)
    axis = None
    try:
        for slot, axis_name, b in rows:
            axis = SideChannelAxis(axis_name)
            index = int(slot)
            if not 0 <= index < n_slots:
                raise IndexError(f"slot {index} outside [0, {n_slots})")
            bins[index] = int(b)
    except (ValueError, IndexError) as e:
        raise ConfigurationError(f"Eve log '{path}' has a malformed row: {e}") from e
    return bins, axis


def write_count_rates(
    path: str | Path, bin_starts: np.ndarray, rates: np.ndarray, run_id: str | None = None
) -> None:
    def blocks() -> Iterable[str]:
        yield "".join(
            ",".join([f"{start:.6f}", *(f"{r:.6g}" for r in row)]) + "\n"
            for start, row in zip(bin_starts, rates, strict=True)
        )

    _write_rows(path, COUNT_RATE_HEADER, blocks(), run_id)


def write_key(path: str | Path, bits: np.ndarray, run_id: str | None = None) -> None:
    """Sifted key, one bit per line."""
    bits = np.asarray(bits, dtype=np.uint8)
    _write_rows(path, KEY_HEADER, _int_blocks(bits) if bits.size else (), run_id)


def read_key(path: str | Path) -> np.ndarray:
    return _int_table(path, KEY_HEADER, 1)[:, 0].astype(np.uint8)
