"""Tests for artifact files and the run manifest."""

import numpy as np
import pytest

from lumenqkd import logs
from lumenqkd.exceptions import ConfigurationError
from lumenqkd.model import SideChannelAxis
from lumenqkd.postprocess import announce


class TestPackedCodes:
    """Test suite for the packed preparation log."""

    def test_ten_codes_per_word(self):
        """Test that the first code lands in the lowest three bits."""
        words = logs.pack_codes(np.array([1, 2, 0, 0, 0, 0, 0, 0, 0, 0, 6]))

        assert words.tolist() == [1 | 2 << 3, 6]

    def test_unpack_trims_padding(self):
        """Test that unpacking returns exactly the requested number of codes."""
        codes = np.array([6, 5, 4, 3, 2, 1, 0, 6, 5, 4, 3, 2, 1], dtype=np.uint8)

        assert np.array_equal(logs.unpack_codes(logs.pack_codes(codes), codes.size), codes)

    def test_file(self, tmp_path):
        """Test the slot-count prefix and word layout of the packed file."""
        path = tmp_path / "prep.bin"
        codes = np.arange(7, dtype=np.uint8)
        logs.write_packed_preparation_log(path, codes)

        raw = path.read_bytes()

        assert len(raw) == 8 + 4
        assert int.from_bytes(raw[:8], "little") == 7
        assert np.array_equal(logs.read_packed_preparation_log(path), codes)

    def test_truncated_file(self, tmp_path):
        """Test that a file shorter than its slot count raises ConfigurationError."""
        path = tmp_path / "prep.bin"
        path.write_bytes((25).to_bytes(8, "little") + bytes(4))

        with pytest.raises(ConfigurationError):
            logs.read_packed_preparation_log(path)


class TestCsvLogs:
    """Test suite for the CSV event logs."""

    def test_preparation_log_layout(self, tmp_path):
        """Test the run line, header and one row per slot."""
        path = tmp_path / "prep.csv"
        logs.write_preparation_log(path, np.array([0, 6, 3]), run_id="r1")

        assert path.read_text() == "# run: r1\nslot_index,state_code\n0,0\n1,6\n2,3\n"
        assert logs.read_run_id(path) == "r1"
        assert logs.read_preparation_log(path).tolist() == [0, 6, 3]

    def test_preparation_log_invalid_code(self, tmp_path):
        """Test that a reserved code raises ConfigurationError."""
        path = tmp_path / "prep.csv"
        path.write_text("slot_index,state_code\n0,7\n")

        with pytest.raises(ConfigurationError):
            logs.read_preparation_log(path)

    def test_preparation_log_out_of_order(self, tmp_path):
        """Test that slots must be numbered from zero in order."""
        path = tmp_path / "prep.csv"
        path.write_text("slot_index,state_code\n1,0\n0,0\n")

        with pytest.raises(ConfigurationError):
            logs.read_preparation_log(path)

    def test_wrong_header(self, tmp_path):
        """Test that a log with the wrong header raises ConfigurationError."""
        path = tmp_path / "det.csv"
        path.write_text("bit\n1\n")

        with pytest.raises(ConfigurationError) as exc_info:
            logs.read_detection_log(path)

        assert "detector,raw_tag" in str(exc_info.value)

    def test_announcements_name_basis_and_intensity(self, tmp_path):
        """Test that announcements are written by name and read back as indices."""
        path = tmp_path / "ann.csv"
        logs.write_announcements(path, announce(np.array([0, 5, 6])))

        assert path.read_text().splitlines()[1:] == ["0,LR,signal", "1,HV,decoy", "2,none,vacuum"]
        loaded = logs.read_announcements(path)
        assert loaded.basis.tolist() == [1, 0, -1]
        assert loaded.intensity.tolist() == [0, 1, 2]

    def test_announcements_malformed(self, tmp_path):
        """Test that an unknown basis name raises ConfigurationError."""
        path = tmp_path / "ann.csv"
        path.write_text("slot_index,basis,intensity\n0,XY,signal\n")

        with pytest.raises(ConfigurationError):
            logs.read_announcements(path)

    def test_detection_log(self, tmp_path):
        """Test that detectors and raw tags read back in arrival order."""
        path = tmp_path / "det.csv"
        logs.write_detection_log(path, np.array([3, 0]), np.array([1_073_741_823, 5]))

        detectors, tags = logs.read_detection_log(path)

        assert detectors.tolist() == [3, 0]
        assert tags.tolist() == [1_073_741_823, 5]

    def test_detection_log_invalid_detector(self, tmp_path):
        """Test that a detector index outside 0..3 raises ConfigurationError."""
        path = tmp_path / "det.csv"
        path.write_text("detector,raw_tag\n4,10\n")

        with pytest.raises(ConfigurationError):
            logs.read_detection_log(path)

    def test_eve_log_skips_vacuum(self, tmp_path):
        """Test that only slots with a bin are written and absent slots read as -1."""
        path = tmp_path / "eve.csv"
        logs.write_eve_log(path, np.array([4, -1, 7]), SideChannelAxis.TEMPORAL)

        bins, axis = logs.read_eve_log(path, 3)

        assert path.read_text().splitlines()[1:] == ["0,temporal,4", "2,temporal,7"]
        assert bins.tolist() == [4, -1, 7]
        assert axis is SideChannelAxis.TEMPORAL

    @pytest.mark.parametrize("row", ["-1,temporal,3", "3,temporal,3"])
    def test_eve_log_slot_out_of_range(self, tmp_path, row):
        """Test that a negative or too-large slot raises ConfigurationError."""
        path = tmp_path / "eve.csv"
        logs.write_eve_log(path, np.array([4, -1, 7]), SideChannelAxis.TEMPORAL)
        with open(path, "a") as f:
            f.write(row + "\n")

        with pytest.raises(ConfigurationError, match="outside"):
            logs.read_eve_log(path, 3)

    def test_count_rates(self, tmp_path):
        """Test the count-rate file layout."""
        path = tmp_path / "rates.csv"
        logs.write_count_rates(path, np.array([0.0, 0.5]), np.array([[1, 2, 3, 4], [5, 6, 7, 8]]))

        lines = path.read_text().splitlines()
        assert lines == ["bin_start_s,H,V,L,R", "0.000000,1,2,3,4", "0.500000,5,6,7,8"]

    def test_key(self, tmp_path):
        """Test that key bits are written one per line."""
        path = tmp_path / "key.csv"
        logs.write_key(path, np.array([1, 0, 1]), run_id="k")

        assert logs.read_key(path).tolist() == [1, 0, 1]

    def test_empty_key(self, tmp_path):
        """Test that an empty key leaves only the header."""
        path = tmp_path / "key.csv"
        logs.write_key(path, np.array([], dtype=np.uint8))

        assert path.read_text() == "bit\n"
        assert logs.read_key(path).size == 0


class TestRunManifest:
    """Test suite for RunManifest model."""

    def test_run_id_reproducible(self):
        """Test that equal inputs give equal run ids and a seed change alters it."""
        a = logs.RunManifest(command="simulate", config={"mu_signal": 1.0}, rng_seed=1)
        b = logs.RunManifest(command="simulate", config={"mu_signal": 1.0}, rng_seed=1)
        c = logs.RunManifest(command="simulate", config={"mu_signal": 1.0}, rng_seed=2)

        assert a.run_id == b.run_id
        assert a.run_id != c.run_id
        assert len(a.run_id) == 16

    def test_outputs_do_not_change_run_id(self):
        """Test that the list of outputs is not part of the run id."""
        a = logs.RunManifest(command="analyze")
        b = logs.RunManifest(command="analyze", outputs=["mi.json"])

        assert a.run_id == b.run_id

    def test_write_then_load(self, tmp_path):
        """Test that a written manifest loads back with the same run id."""
        manifest = logs.RunManifest(
            command="postprocess", parameters={"strict": False}, input_digests={"a": "00"}
        )
        path = tmp_path / "manifest.json"
        manifest.write(path)

        loaded = logs.RunManifest.load(path)

        assert loaded == manifest
        assert logs.read_json(path)["run_id"] == manifest.run_id

    def test_load_invalid_json(self, tmp_path):
        """Test that an unreadable manifest raises ConfigurationError."""
        path = tmp_path / "manifest.json"
        path.write_text("{not json")

        with pytest.raises(ConfigurationError):
            logs.RunManifest.load(path)

    def test_file_digest(self, tmp_path):
        """Test that the digest is the SHA-256 of the file bytes."""
        path = tmp_path / "data.bin"
        path.write_bytes(b"abc")

        expected = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        assert logs.file_digest(path) == expected
