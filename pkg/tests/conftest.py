import numpy as np
import pytest

from dtcellsim.mobility import Trajectory
from dtcellsim.scenario import desk_config
from dtcellsim.streets import synth_street_graph


class StaticSource:
    """Users stand still for their whole lifetime; fixes |U| dynamics in tests."""

    def __init__(self, area):
        self.area = area

    def sample(self, rng, duration, start=None, previous=None):
        w, h = self.area
        pos = (np.array([rng.uniform(0, w), rng.uniform(0, h)])
               if start is None else np.asarray(start, dtype=np.float64))
        return Trajectory(t=np.array([0.0, max(duration, 1.0)]),
                          xy=np.stack([pos, pos]))


@pytest.fixture(scope="session")
def desk_cfg():
    return desk_config()


@pytest.fixture(scope="session")
def street_graph():
    # small but non-trivial: 1 km lattice at 150 m blocks with 15% edges dropped
    return synth_street_graph(17, (1000.0, 1000.0), 150.0, 0.15)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
