import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).resolve().parent.parent))

from sirl_swarm.environment.world import TargetShape, WorldState  # noqa: E402
from sirl_swarm.harness import load_shape  # noqa: E402
from sirl_swarm.models.agent import AgentBrain  # noqa: E402
from sirl_swarm.trainer import TrainerConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the long acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_shape(width, height, cells):
    r"""
    Target shape of the given size with the listed (x, y) cells labeled
    """
    labeled = np.zeros((height, width), dtype=bool)
    for x, y in cells:
        labeled[y, x] = True
    return TargetShape(labeled)


def make_world(width, height, cells, positions):
    return WorldState(make_shape(width, height, cells), positions)


@pytest.fixture
def square3():
    return load_shape("square3")


@pytest.fixture
def cross5():
    return load_shape("cross5")


@pytest.fixture
def block12():
    return load_shape("block12")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cfg():
    return TrainerConfig(t_max=3, rounds=10, seed=7, hidden=(8,), target_sync_every=5, test_every=0, checkpoint_every=0)


@pytest.fixture
def small_brain():
    return AgentBrain.create(hidden=(8,), seed=3)
