"""Every invariant family, at least 100 random cases each (or exhaustive), on several towers."""

import pytest

from weilspin import suites
from conftest import context

EXHAUSTIVE = suites.EXHAUSTIVE
TOWER_KEYS = ["t3d4", "t0d4", "t0d2", "t3d2"]


@pytest.mark.parametrize("family", sorted(suites.FAMILIES))
@pytest.mark.parametrize("tower", TOWER_KEYS)
def test_family(tower, family):
    ctx = context(tower)
    res = suites.run_family(ctx, family, seed=0, cases=100)
    if res.skipped:
        assert family == "primitivity" and ctx.d == 2
        return
    assert res.passed, res.to_json()
    if family not in EXHAUSTIVE:
        assert res.cases >= 100


def test_exhaustive_counts():
    ctx = context("t3d4")
    assert suites.run_family(ctx, "filtration_projection").cases == 16
    assert suites.run_family(ctx, "mukai_inversion").cases == 1 << ctx.h
    assert suites.run_family(ctx, "ell_purity_independence").cases == 5


def test_run_suites_is_deterministic():
    ctx = context("t0d2")
    a = suites.run_suites(ctx, seed=3, cases=10)
    b = suites.run_suites(ctx, seed=3, cases=10)
    assert list(a) == sorted(a)
    assert [r.to_json() for r in a.values()] == [r.to_json() for r in b.values()]


def test_unknown_suite():
    with pytest.raises(KeyError):
        suites.run_suites(context("t0d2"), ["no_such_family"])


def test_failure_payload():
    res = suites.FamilyResult("x", "a statement").fail(v=[1, 2])
    doc = res.to_json()
    assert doc["passed"] is False and doc["counterexample"] == {"v": [1, 2]}


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("WEILSPIN_THREADS", "2")
    assert suites.thread_cap() == 2
    monkeypatch.delenv("WEILSPIN_THREADS")
    assert 1 <= suites.thread_cap() <= 4
