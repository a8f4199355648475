"""Pytest configuration for the random access simulator tests."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same fresh stream."""
    return np.random.default_rng(12345)
