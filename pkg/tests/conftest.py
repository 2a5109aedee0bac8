import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=50,
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20_240_517)


def random_graph(n, p, rng):
    """Simple symmetric hollow 0/1 matrix with edge probability p."""
    iu = np.triu_indices(n, 1)
    A = np.zeros((n, n))
    A[iu] = rng.random(iu[0].size) < p
    return A + A.T
