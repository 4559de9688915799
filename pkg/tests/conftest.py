"""Shared fixtures. The big direction library is built once per session."""

import numpy as np
import pytest

from klconst import default_library


@pytest.fixture(scope="session")
def library_k2_ls6():
    # packings for N = 1..64 in C^2; a couple of seconds, reused everywhere
    return default_library(2, 6, seed=0)


@pytest.fixture(scope="session")
def library_k2_ls2():
    return default_library(2, 2, seed=0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)
