import numpy as np
import pytest

import autocat as ac


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the simulation kernels once so timed tests measure runtime."""
    net = ac.create_network(2, "full-symmetric", 0.05, 0.2, 0.01)
    ac.simulate_trajectory(net, [1, 1], 0.5, seed=1)
    ac.ensemble_sample(net, [1, 1], 0.5, 4, master_seed=1)


@pytest.fixture
def fig1_net():
    return ac.create_network(2, "full-symmetric", 0.05, 0.2, 0.01)


def make_rng(seed):
    return np.random.default_rng(seed)
