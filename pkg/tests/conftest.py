import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    """Fresh deterministic generator for test-local randomness."""
    return np.random.default_rng(0xC0FFEE)
