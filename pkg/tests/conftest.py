import numpy as np
import pytest

from mtgv.manifolds import CIRCLE, SPD3, SPHERE2, Euclidean

ALL_MANIFOLDS = [CIRCLE, SPHERE2, SPD3, Euclidean(2)]
CURVED_MANIFOLDS = [SPHERE2, SPD3]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def cluster(mf, rng, n, spread=0.4):
    """n random points close enough for unique pairwise geodesics."""
    c = mf.random_point(rng)
    return [mf.exp(c, mf.random_tangent(rng, c, scale=spread)) for _ in range(n)]


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running regression runs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
