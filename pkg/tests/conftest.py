import json
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from fracnls.grid import Grid
from fracnls.solvers import gradient_flow_minimize, solve_static_ground_state

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())
SIGMAS = (0.6, 0.75, 0.9)


@pytest.fixture(scope="session")
def oracle():
    return ORACLES


@lru_cache(maxsize=None)
def minimizer(sigma):
    return gradient_flow_minimize(sigma, cross_check=True)


@lru_cache(maxsize=None)
def static_profile(sigma, L=640 * np.pi, n=2**17):
    return solve_static_ground_state(sigma, 1.0, Grid(L, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
