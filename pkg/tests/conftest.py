from __future__ import annotations

import pytest

from hofvsr.space import build_space, default_space


@pytest.fixture(scope="session")
def paper_space():
    return default_space()


@pytest.fixture
def tiny_space():
    return build_space([("alpha", [1, 2]), ("beta", [10, 20, 30])])
