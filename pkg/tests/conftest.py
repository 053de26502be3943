import numpy as np
import pytest

from treeswap import enumerate_space, stationary_law, transition_matrix

_SPACES = {}
_KERNELS = {}
_LAWS = {}


@pytest.fixture(scope="session")
def space():
    """Memoized state space factory: space(n, mode)."""

    def get(n, mode):
        key = (n, mode)
        if key not in _SPACES:
            _SPACES[key] = enumerate_space(n, mode)
        return _SPACES[key]

    return get


@pytest.fixture(scope="session")
def kernel(space):
    """Memoized kernel factory: kernel(n, mode, lazy=False)."""

    def get(n, mode, lazy=False):
        key = (n, mode, lazy)
        if key not in _KERNELS:
            _KERNELS[key] = transition_matrix(space(n, mode), lazy=lazy)
        return _KERNELS[key]

    return get


@pytest.fixture(scope="session")
def law(space):
    """Memoized stationary law factory: law(n, mode)."""

    def get(n, mode):
        key = (n, mode)
        if key not in _LAWS:
            _LAWS[key] = stationary_law(space(n, mode))
        return _LAWS[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(20260817)
