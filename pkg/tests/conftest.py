"""Shared fixtures; the simlab modules import each other by bare name."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'simlab'))

from optimize import OptimOptions  # noqa: E402
from quadrature import QuadratureConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def fast_opts():
    """Loose optimizer settings for tests that only need a reasonable optimum."""
    return OptimOptions(max_iters=300, x_tol=1e-4, f_tol=1e-6, restarts=1)


@pytest.fixture
def cfg():
    return QuadratureConfig()
