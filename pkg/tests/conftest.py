import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


def within_se(value, exact, sem, k=3.0, floor=0.0):
    """|value - exact| <= k * sem (with an absolute floor for exact zeros)."""
    return abs(value - exact) <= max(k * sem, floor)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
