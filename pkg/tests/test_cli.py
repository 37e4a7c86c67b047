"""Tests for the command-line interface."""

import json

import numpy as np
import pytest

from lumenqkd import cli
from lumenqkd.logs import read_announcements, read_key, write_announcements
from lumenqkd.model import SideChannelAxis
from lumenqkd.transmitter import SourceProfile, write_profile_csv


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """A 0.1 s simulated run with Eve on the temporal axis."""
    out = tmp_path_factory.mktemp("run")
    argv = ["simulate", "--duration", "0.1", "--seed", "3", "--axis", "temporal", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    return out


class TestSimulateCommand:
    """Test suite for the simulate sub-command."""

    def test_writes_logs_and_manifest(self, run_dir):
        """Test that every log and the manifest are written."""
        manifest = json.loads((run_dir / cli.MANIFEST_FILE).read_text())

        for name in (cli.PREPARATION_FILE, cli.DETECTION_FILE, cli.EVE_FILE, cli.TRUTH_FILE):
            assert (run_dir / name).exists()
            assert name in manifest["outputs"]
        assert manifest["rng_seed"] == 3
        assert (run_dir / cli.DETECTION_FILE).read_text().startswith(f"# run: {manifest['run_id']}")

    def test_same_seed_reproduces_every_byte(self, tmp_path):
        """Test that two runs with one seed write identical files and run ids."""
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            argv = ["simulate", "--duration", "0.02", "--seed", "5", "--axis", "temporal"]
            assert cli.main([*argv, "--out", str(out)]) == cli.EXIT_OK
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})

        first, second = outputs
        assert sorted(first) == sorted(second)
        assert cli.MANIFEST_FILE in first
        for name, content in first.items():
            assert content == second[name], name
        first_id = json.loads(first[cli.MANIFEST_FILE])["run_id"]
        assert json.loads(second[cli.MANIFEST_FILE])["run_id"] == first_id

    def test_binary_preparation_log(self, tmp_path):
        """Test that --binary writes the packed preparation log instead of CSV."""
        argv = ["simulate", "--duration", "0.001", "--binary", "--out", str(tmp_path)]

        assert cli.main(argv) == cli.EXIT_OK
        assert (tmp_path / cli.PACKED_PREPARATION_FILE).exists()
        assert not (tmp_path / cli.PREPARATION_FILE).exists()

    def test_non_positive_duration(self, tmp_path, capsys):
        """Test that a zero duration exits with code 2 and a message."""
        exit_code = cli.main(["simulate", "--duration", "0", "--out", str(tmp_path)])

        assert exit_code == cli.EXIT_INVALID
        assert "duration must be positive" in capsys.readouterr().err


class TestPostprocessCommand:
    """Test suite for the postprocess sub-command."""

    def test_key_and_report(self, run_dir, tmp_path):
        """Test that a simulated run synchronizes and yields a key and a report."""
        argv = ["postprocess", "--run-dir", str(run_dir), "--out", str(tmp_path)]

        assert cli.main(argv) == cli.EXIT_OK

        report = json.loads((tmp_path / cli.REPORT_FILE).read_text())
        key = read_key(tmp_path / cli.KEY_FILE)
        assert report["sync"]["accepted"] is True
        assert report["sifting"]["key_records"] == key.size > 0
        assert report["qber"]["mean_QBER"] < 0.11
        assert report["eve"]["axis"] == "temporal"

    def test_shuffled_announcements_rejected(self, run_dir, tmp_path):
        """Test that shuffled announcements exit with code 3 and write no key."""
        shuffled = tmp_path / "shuffled.csv"
        announcements = read_announcements(run_dir / cli.ANNOUNCEMENT_FILE)
        write_announcements(shuffled, announcements.shuffled(np.random.default_rng(0)))
        out = tmp_path / "out"
        argv = [
            "postprocess",
            "--run-dir",
            str(run_dir),
            "--announcements",
            str(shuffled),
            "--out",
            str(out),
        ]

        assert cli.main(argv) == cli.EXIT_SYNC_REJECTED

        report = json.loads((out / cli.REPORT_FILE).read_text())
        assert report["sync"]["accepted"] is False
        assert not (out / cli.KEY_FILE).exists()

    def test_missing_inputs(self, tmp_path, capsys):
        """Test that postprocess without logs exits with code 2."""
        exit_code = cli.main(["postprocess", "--out", str(tmp_path)])

        assert exit_code == cli.EXIT_INVALID
        assert "--run-dir" in capsys.readouterr().err


class TestAnalyzeCommand:
    """Test suite for the analyze sub-command."""

    @pytest.fixture
    def histograms(self, tmp_path):
        paths = []
        for code, counts in enumerate(([750.0, 250.0], [250.0, 750.0])):
            path = tmp_path / f"state_{code}.csv"
            profile = SourceProfile(
                code, SideChannelAxis.TEMPORAL, np.array([0.0, 20.0]), np.array(counts)
            )
            write_profile_csv(profile, path)
            paths.append(str(path))
        return paths

    def test_hand_case(self, histograms, tmp_path, capsys):
        """Test the two-state, two-bin case end to end."""
        out = tmp_path / "mi"

        exit_code = cli.main(["analyze", *histograms, "--mc-samples", "100", "--out", str(out)])

        report = json.loads((out / cli.MI_REPORT_FILE).read_text())
        assert exit_code == cli.EXIT_OK
        assert report["I"] == pytest.approx(0.188722, abs=1e-6)
        assert report["metadata"]["run_id"]
        assert (out / cli.MI_HISTOGRAM_FILE).exists()
        assert (out / cli.DISTRIBUTION_FILE).read_text().splitlines()[1].startswith("bin_center")
        assert "I(B;E|S) = 0.188722" in capsys.readouterr().out

    def test_single_histogram(self, histograms, tmp_path):
        """Test that one histogram is not enough."""
        exit_code = cli.main(["analyze", histograms[0], "--out", str(tmp_path)])

        assert exit_code == cli.EXIT_INVALID


class TestProfilesCommand:
    """Test suite for the profiles sub-command."""

    def test_aligned_profiles(self, tmp_path):
        """Test that every non-vacuum code gets a profile per axis and alignment is recorded."""
        assert cli.main(["profiles", "--align", "--out", str(tmp_path)]) == cli.EXIT_OK

        written = sorted(p.name for p in tmp_path.glob("profile_*.csv"))
        timing = json.loads((tmp_path / "timing.json").read_text())
        assert len(written) == 12
        assert sorted(timing["adjustments"]) == ["0", "1", "2", "3", "4", "5"]
