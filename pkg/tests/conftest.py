import numpy as np
import pytest

# the 3x3 example matrix with two optimal 2-sparse supports
PATH_MATRIX = np.array([[5.0, 1.0, 0.0], [1.0, 5.0, 2.0], [0.0, 2.0, 2.0]])


@pytest.fixture
def path_matrix():
    return PATH_MATRIX.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
