import numpy as np
import pytest

from core.catalog import build


@pytest.fixture
def matching_pennies():
    return build("matching_pennies")


@pytest.fixture
def shapley():
    return build("shapley")


@pytest.fixture
def fig3i():
    return build("fig3i")


@pytest.fixture
def fig1():
    return build("fig1")


@pytest.fixture
def rps():
    return build("rps")


@pytest.fixture
def uniform_z():
    def make(shape):
        return np.full(shape, 1.0 / (shape[0] * shape[1]))

    return make


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv("REGRETLAB_SEED", raising=False)
