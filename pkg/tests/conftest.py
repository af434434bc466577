import numpy as np
import pytest
from hypothesis import settings

from projmetric import catalog
from projmetric.analysis import AnalysisConfig, sample_points

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

SPRAYS = [e.name for e in catalog.CATALOG.values() if e.kind == "spray"]


@pytest.fixture(scope="session")
def example():
    return catalog.get("paper-example").model


@pytest.fixture(scope="session")
def perturbed():
    return catalog.get("perturbed-example").model


def points(n=3, count=5, seed=0):
    return sample_points(n, AnalysisConfig(points=count, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
