import warnings

import numpy as np
import pytest

from minkflow.radial import RadialParams, limit_profile


def _profile(n, k, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return limit_profile(RadialParams(n, k, **kw))


@pytest.fixture(scope="session")
def profile():
    """Cached limit profiles keyed by ``(n, k)``."""
    cache = {}

    def get(n, k, **kw):
        key = (n, k, tuple(sorted(kw.items())))
        if key not in cache:
            cache[key] = _profile(n, k, **kw)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
