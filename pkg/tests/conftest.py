"""Shared fixtures: default hardware and the straight-platoon geometry."""

import pytest

from vlcloc.channel import LOW_NOISE
from vlcloc.measurement import SimulationSetup, default_setup
from vlcloc.scenarios import ScenarioSpec, generate_scenario


@pytest.fixture(scope="session")
def platoon_traj():
    return generate_scenario(ScenarioSpec.for_id("platoon-straight"))


@pytest.fixture(scope="session")
def frame_5m(platoon_traj):
    """First straight-platoon frame: lamp 1 dead ahead at 5 m."""
    return platoon_traj.frames[0]


@pytest.fixture(scope="session")
def frame_5m_next(platoon_traj):
    return platoon_traj.frames[1]


@pytest.fixture()
def setup_projected():
    return default_setup()


@pytest.fixture()
def setup_waveform():
    return default_setup(noise_sampling="waveform")
