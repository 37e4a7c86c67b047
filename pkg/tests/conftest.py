"""Shared fixtures for the lumenqkd test suite."""

import os
from unittest.mock import patch

import numpy as np
import pytest

from lumenqkd.config import SessionConfig
from lumenqkd.postprocess import SyncResult, assign_slots
from lumenqkd.session import simulate_session


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    """Keep LUMENQKD_* variables, .env files and ./lumenqkd.yaml out of every test."""
    monkeypatch.chdir(tmp_path)
    cleaned = {k: v for k, v in os.environ.items() if not k.startswith("LUMENQKD_")}
    cleaned["PWD"] = str(tmp_path)
    with patch.dict(os.environ, cleaned, clear=True):
        yield


@pytest.fixture
def config():
    """Default session configuration."""
    return SessionConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def true_slots(session):
    """Slot index per detection using the simulator's own clock (no sync search)."""
    config = session.config
    result = SyncResult(
        offset=0.0,
        drift=0.0,
        confidence=1.0,
        accepted=True,
        slot_shift=0,
        phase_ps=float(config.pulse_centroid_ps),
    )
    return assign_slots(session.detections.true_time_ps, result, config, session.n_slots)


@pytest.fixture
def slot_assigner():
    """The true_slots helper, for tests that assign slots without synchronizing."""
    return true_slots


@pytest.fixture(scope="session")
def short_session():
    """A 50 ms session with the default configuration and a fixed seed."""
    return simulate_session(SessionConfig(rng_seed=7), 0.05)
