import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rssiloc.channel import ChannelParams  # noqa: E402
from rssiloc.netsim import run_acquisition  # noqa: E402
from rssiloc.scenario import Arena, make_trajectory  # noqa: E402


@pytest.fixture(scope="session")
def arena():
    return Arena()


@pytest.fixture(scope="session")
def small_dataset(arena):
    traj = make_trajectory(arena, "lissajous", 60.0)
    return run_acquisition(arena, traj, [ChannelParams(seed=3)] * 5, seed=3)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
