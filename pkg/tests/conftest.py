import numpy as np
import pytest

from spotlights import bounding_sphere, normalize_to_unit_sphere
from spotlights.shapes import fixture_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus():
    return fixture_corpus()


@pytest.fixture(scope="session")
def unit_corpus(corpus):
    """Corpus meshes normalized into the unit ball."""
    return {
        name: normalize_to_unit_sphere(mesh, bounding_sphere(mesh))
        for name, mesh in corpus.items()
    }
