import sys

import pytest

from swarm_aoi.channel import Duplex, LinkBudget, RateConfig
from swarm_aoi.mdp import build_scenario
from swarm_aoi.world import UavConfig, WorldConfig

# full duplex at this rate fits exactly k devices per cluster with the default link budget
PER_DEVICE_RATE = 1.25e6


def make_scenario(nx=3, ny=3, devices=4, capacity=2, uavs=1, horizon=10, restricted=(),
                  duplex=Duplex.FULL, start_cells=None, device_seed=0, **kw):
    rate = capacity * PER_DEVICE_RATE * (2 if Duplex(duplex) is Duplex.HALF else 1)
    return build_scenario(
        WorldConfig(nx, ny, restricted_cells=frozenset(restricted), rng_seed=device_seed),
        devices, LinkBudget(), RateConfig(rate, duplex),
        UavConfig(count=uavs, duplex=duplex, start_cells=start_cells), horizon=horizon, **kw)


@pytest.fixture
def tiny():
    """3x3 grid, 1 UAV, 4 devices in 2 clusters, 10 frames."""
    return make_scenario()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
