"""Shared fixtures."""

import pytest

from services.symseq import Truncation


@pytest.fixture
def small():
    """Arity ≤ 3, weight ≤ 3: enough for every identity of the built-in objects."""
    return Truncation(3, (-16, 16), 3)


@pytest.fixture
def truncation():
    def make(max_arity: int = 4, max_weight: int = 4, window=(-64, 64)) -> Truncation:
        return Truncation(max_arity, window, max_weight)

    return make


@pytest.fixture(autouse=True)
def _cell_cap(monkeypatch):
    monkeypatch.delenv("OPERADIA_MAX_CELLS", raising=False)
