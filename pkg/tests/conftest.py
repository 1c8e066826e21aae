"""Shared contexts. Building one is cheap; the memoized data on it is not."""

import pytest
from gmpy2 import mpq

from weilspin.fieldtower import TowerSpec
from weilspin.weilstructure import build_context

TOWERS = {
    "t3d4": (3, 1, 4),
    "t0d4": (0, 1, 4),
    "t0d2": (0, 1, 2),
    "t3d2": (3, 1, 2),
}

_CACHE: dict = {}


def context(key):
    if key not in _CACHE:
        t, q, d = TOWERS[key]
        _CACHE[key] = build_context(TowerSpec(t, mpq(q)), d=d)
    return _CACHE[key]


@pytest.fixture(scope="session")
def flagship():
    return context("t3d4")


@pytest.fixture(scope="session")
def e2d4():
    return context("t0d4")


@pytest.fixture(scope="session")
def e2d2():
    return context("t0d2")


@pytest.fixture(scope="session")
def e4d2():
    return context("t3d2")


@pytest.fixture(scope="session", params=sorted(TOWERS))
def any_ctx(request):
    return context(request.param)


@pytest.fixture(scope="session")
def spec3():
    return TowerSpec(3, mpq(1))
