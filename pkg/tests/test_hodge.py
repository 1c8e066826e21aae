import random

import pytest
from gmpy2 import mpq

from weilspin import hodge as H
from weilspin import linalg as la
from weilspin import secant as S
from weilspin import spinclifford as SC
from weilspin.errors import EtaIncompatible, NotAMember, SearchExhausted
from weilspin.exterior import Multivector, wedge
from weilspin.fieldtower import CMType, TowerSpec
from weilspin.suites import _isotropic_vector
from weilspin.weilstructure import build_context


def fixture_for(t, q, d):
    spec = TowerSpec(t, mpq(q))
    rm, I = H.builtin_fixture(spec, d)
    return build_context(spec, rm, d), I


@pytest.fixture(scope="module")
def fx():
    return fixture_for(3, 1, 4)


@pytest.fixture(scope="module")
def fx2():
    return fixture_for(0, 1, 4)


def test_fixture_basics(fx):
    ctx, I = fx
    assert I.square_is_minus_one()
    assert H.commutes_with_eta(ctx, I)
    X = I.x_block()
    M = ctx.rm.eta_hat_sqrt_t
    assert la.equal(la.matmul(X, M), la.matmul(M, X))
    assert I.t == ctx.spec.sqrt_mtq


def test_hodge_type_examples(fx):
    ctx, I = fx
    xi = ctx.xi_form(ctx.spec.sqrt_mq)[1]
    assert H.hodge_type_test(I, xi)
    assert H.hodge_type_test(I, ctx.rm.theta)
    witness = Multivector.monomial(ctx.h, [0, 1])
    assert not H.hodge_type_test(I, witness)


def test_hodge_leibniz_and_hw(fx):
    ctx, I = fx
    sb = S.secant_basis(ctx)
    for x in sb.vectors:
        assert H.hodge_type_test(I, x)
    assert H.hodge_type_test(I, wedge(sb.vectors[1], sb.vectors[3]))
    for v in ctx.HW_basis:
        assert H.hodge_type_test(I, v)


def test_weil_dims(fx, fx2):
    for ctx, I in (fx, fx2):
        dims = H.weil_condition(ctx, I)
        assert set(dims.values()) == {ctx.d // 2}
    ctx, _ = fx
    flipped = H.oriented_structure(ctx, (1, -1))
    assert set(H.weil_condition(ctx, flipped).values()) == {2}


def test_unbalanced_structure(fx):
    ctx, _ = fx
    I = H.ComplexStructure(ctx.eta_sqrt_mq)  # q = 1, so eta(sqrt -q) squares to -1
    assert I.square_is_minus_one()
    dims = H.weil_condition(ctx, I)
    assert sorted(dims.values()) == [0, 0, 4, 4]
    assert H.omega_membership(ctx, I, ctx.spec.sqrt_mq).failing_clause == "Weil condition fails"


def test_eta_incompatible(fx):
    ctx, _ = fx
    n, h = ctx.rank, ctx.h
    J = la.zeros(n)
    for i in range(h):
        J[i][h + i] = mpq(-1)
        J[h + i][i] = mpq(1)
    with pytest.raises(EtaIncompatible):
        H.weil_condition(ctx, J)
    with pytest.raises(SearchExhausted):
        H.polarizing_t_search(ctx, J)


def test_omega_membership(fx, fx2):
    for ctx, I in (fx, fx2):
        assert H.omega_membership(ctx, I, I.t).member
        neg = H.omega_membership(ctx, -I, I.t)
        assert not neg.member and neg.failing_clause == "g_I is not positive definite"
        assert not H.omega_membership(ctx, I, -I.t).member


def test_e2_orientation_decides_t(fx2):
    ctx, _ = fx2
    up = H.polarizing_t_search(ctx, H.oriented_structure(ctx, (1,)))
    down = H.polarizing_t_search(ctx, H.oriented_structure(ctx, (-1,)))
    assert {up, down} == {ctx.spec.sqrt_mq, -ctx.spec.sqrt_mq}


def test_delta_transfer(fx):
    ctx, I = fx
    T1 = H.cm_type_of(ctx.spec, I.t)
    same = H.delta_transfer(ctx, I, T1, T1)
    assert la.equal(same.matrix, I.matrix)
    for T2 in S.cm_types(ctx):
        J = H.delta_transfer(ctx, I, T1, T2)
        assert H.cm_type_of(ctx.spec, J.t) == T2
        assert H.omega_membership(ctx, J, J.t).member
        back = H.delta_transfer(ctx, J, T2, T1)
        assert la.equal(back.matrix, I.matrix)
    wrong = T1.conjugate()
    with pytest.raises(NotAMember):
        H.delta_transfer(ctx, I, wrong, T1)


def test_unipotent_conjugation_preserves_membership(fx):
    ctx, I = fx
    rng = random.Random(9)
    rho = H.unipotent_isometry(ctx, I.t, _isotropic_vector(ctx, rng, I.t))
    G = ctx.gram
    assert la.equal(la.matmul(la.transpose(rho), la.matmul(G, rho)), G)
    assert H.commutes_with_eta(ctx, rho)
    J = I.conjugate_by(rho)
    assert H.omega_membership(ctx, J, I.t).member
    assert not H.omega_membership(ctx, J, -I.t).member


def test_spin_sample_conjugation_keeps_structural_clauses(fx):
    """spin_sample lives over K~, so only I^2 = -1, eta-commutation and W_T-stability are compared."""
    ctx, I = fx
    g = SC.spin_sample(ctx, 3)
    J = I.conjugate_by(g.rho)
    assert J.square_is_minus_one()
    assert H.commutes_with_eta(ctx, J)
    assert H._w_stable(ctx, J.matrix)


def test_hodge_report(fx):
    ctx, I = fx
    rep = H.hodge_report(ctx, I)
    assert rep["hodgeB"] == [True] * 4
    assert rep["omega"]["member"] is True
    assert set(rep["weil_dims"].values()) == {2}
    assert CMType((1, -1)) == H.cm_type_of(ctx.spec, I.t)
