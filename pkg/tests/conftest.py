import numpy as np
import pytest

from qclassify import _backend


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run the test once per available core (compiled and numpy)."""
    monkeypatch.setattr(_backend, "core", _backend.get(request.param))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
