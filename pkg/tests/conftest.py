import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stdroute import (
    LinkUtilitySpec,
    enumerate_policies,
    initial_state,
    load_bundled_network,
    solve_value_functions,
)


@pytest.fixture(scope="session")
def example():
    """Bundled two-route network: (network, support points)."""
    return load_bundled_network()


@pytest.fixture(scope="session")
def net(example):
    return example[0]


@pytest.fixture(scope="session")
def spp(example):
    return example[1]


@pytest.fixture(scope="session")
def s0(net, spp):
    return initial_state(net, spp)


@pytest.fixture(scope="session")
def unit_utility():
    """Negative travel time with unit scale."""
    return LinkUtilitySpec()


@pytest.fixture(scope="session")
def vf(net, spp, unit_utility):
    return solve_value_functions(net, spp, unit_utility)


@pytest.fixture(scope="session")
def cs(net, spp, s0):
    return enumerate_policies(net, spp, s0)
