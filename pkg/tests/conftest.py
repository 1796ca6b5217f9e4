"""Shared fixtures. The fitted coefficients are computed once per session."""

import pytest

from rqss.modes import get_transition


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("coeff-cache")


@pytest.fixture(scope="session")
def fit20(cache_dir):
    return get_transition(n_max=20, cache_dir=cache_dir)


@pytest.fixture(scope="session")
def fit10(cache_dir):
    return get_transition(n_max=10, cache_dir=cache_dir)
