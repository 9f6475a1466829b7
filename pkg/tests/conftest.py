import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=40)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scalar_example():
    """(H, F, N, r0) = (1, 0.5, 0.3, 1)."""
    from stochreal import RealizationTriplet
    return RealizationTriplet(1.0, 0.5, 0.3), 1.0
