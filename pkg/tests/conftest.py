import numpy as np
import pytest

from margex.criteria import check_compatible
from margex.states import density, random_density
from margex.linalg import partial_trace


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


def traced_pair(rng, dims=(2, 2, 2), rank=None):
    """Compatible pair obtained by reducing one random joint state."""
    n = int(np.prod(dims))
    rho123 = density(random_density(n, rank=rank, rng=rng).mat, dims)
    rho12 = density(partial_trace(rho123.mat, dims, [0, 1]), dims[:2])
    rho23 = density(partial_trace(rho123.mat, dims, [1, 2]), dims[1:])
    return check_compatible(rho12, rho23), rho123
