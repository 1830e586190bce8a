import numpy as np
import pytest

from nceh.geometry import ManifoldParams, SamplingBox, sample_points


@pytest.fixture
def params():
    return ManifoldParams(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def interior_points(params, n, seed=0, box=SamplingBox()):
    return sample_points(params, n, np.random.default_rng(seed), box)
