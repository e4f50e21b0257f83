import numpy as np
import pytest

from wsobolev.ode import solve_bvp
from wsobolev.params import WeightPair

_SOLVED = {}


def solved(n, alpha, beta):
    """solve_bvp result, cached across the session."""
    key = (n, float(alpha), float(beta))
    if key not in _SOLVED:
        _SOLVED[key] = solve_bvp(WeightPair(n, alpha, beta))
    return _SOLVED[key]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
