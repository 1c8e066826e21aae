"""The Theta family in H^2 + H^6 for t = 3, q = 1, d = 4."""

import random

import pytest
from gmpy2 import mpq

from weilspin import secant as S
from weilspin.exterior import power
from weilspin.fieldtower import sqrt_in_F


@pytest.fixture(scope="module")
def setup(flagship):
    spec = flagship.spec
    th = flagship.rm.theta
    return flagship, spec, spec.q, th, power(th, 3)


def rand_F(spec, rng, r=4):
    while True:
        x = spec.elt(rng.randint(-r, r), rng.randint(-r, r))
        if not x.is_zero():
            return x


def family_member(ctx, f1, h):
    return S.theta_family_class(ctx, f1, S.family_graph_f2(ctx, f1, h))


def test_m_f_maps_between_families(setup):
    ctx, spec, q, th, th3 = setup
    base = S.b_family(ctx, spec.one)
    rng = random.Random(0)
    for f in (spec.elt(2, 1), spec.elt(1, 1), spec.elt(mpq(1, 2), -3)):
        target = S.b_family(ctx, f)
        for _ in range(4):
            x = family_member(ctx, rand_F(spec, rng), spec.one)
            assert base.member(x.terms)
            assert target.member(S.m_f(ctx, f, x).terms)


def test_families_meet_trivially(setup):
    ctx, spec, q, th, th3 = setup
    base = S.b_family(ctx, spec.one)
    for f in (spec.elt(2, 1), spec.elt(3), spec.elt(1, 1)):
        meet = S.h2h6_part(ctx, base.intersect(S.b_family(ctx, f)))
        assert meet.dim == 0
    assert base.equals(S.b_family(ctx, -spec.one))


def test_family_characterization_random(setup):
    ctx, spec, q, th, th3 = setup
    rng = random.Random(2024)
    seen_members = seen_non = 0
    for i in range(20):
        f1 = rand_F(spec, rng)
        if i % 2 == 0:
            h = rand_F(spec, rng, 3)
            f2 = S.family_graph_f2(ctx, f1, h)
        else:
            f2 = rand_F(spec, rng)
        x = S.theta_family_class(ctx, f1, f2)
        ratio = f2 / (f1.gamma() * (-q / 6))
        root = sqrt_in_F(ratio)
        if root is None:
            seen_non += 1
            # x would lie in B_h only if f2 = -(q/6) gamma(f1) h^2, so test the closest candidates
            for h in (spec.one, spec.elt(2, 1), spec.elt(1, 1), rand_F(spec, rng)):
                assert not S.b_family(ctx, h).member(x.terms)
        else:
            seen_members += 1
            assert S.b_family(ctx, root).member(x.terms)
            assert S.b_theta_family_test(ctx, x, root).member
    assert seen_members and seen_non


def test_f1_zero_is_never_a_member(setup):
    ctx, spec, q, th, th3 = setup
    x = S.theta_family_class(ctx, spec.elt(0), spec.elt(1, 2))
    for h in (spec.one, spec.elt(2, 1)):
        assert not S.b_family(ctx, h).member(x.terms)


@pytest.mark.parametrize("f", [(2, 1), (1, 1), (3, -1)])
def test_corollary_parts_one_and_two(setup, f):
    ctx, spec, q, th, th3 = setup
    f = spec.elt(*f)
    g = lambda x: S.pullback(ctx, f, x)  # noqa: E731
    nf = f * f.gamma()
    assert S.b_family(ctx, nf * f).member((th + g(th3).scale(-q / 6)).terms)
    assert S.b_family(ctx, f.inv().gamma()).member((g(th) + th3.scale(-q / 6)).terms)


def test_corollary_part_three(setup):
    ctx, spec, q, th, th3 = setup
    f = spec.elt(2, 1)
    assert f * f.gamma() == spec.one
    x = S.pullback(ctx, f, th) - S.pullback(ctx, f.inv(), th3).scale(q / 6)
    assert S.b_family(ctx, spec.one).member(x.terms)
    assert not S.p_k0(ctx).member(x.terms)
