import itertools

import pytest
from gmpy2 import mpq

from weilspin import linalg as la
from weilspin import secant as S
from weilspin import spinclifford as SC
from weilspin.errors import NotFCompatible, NotIsotropic, NotMaximal
from weilspin.exterior import Multivector, Subspace, exp_truncated, wedge
from weilspin.fieldtower import real_embeddings
from weilspin.suites import sigma_hat_element

ZERO = mpq(0)


def restricted(rho, basis):
    """Matrix of rho on span(basis), which rho must preserve."""
    sp = Subspace(None, [SC.list_to_dict(b) for b in basis], track=True)
    cols = []
    for b in basis:
        sol = sp.solve(SC.list_to_dict(la.matvec(rho, b)))
        assert sol is not None, "subspace is not preserved"
        cols.append([sol.get(i, ZERO) for i in range(len(basis))])
    return la.transpose(cols)


def test_clifford_action_examples():
    qs = SC.QuadSpace(2)
    one = Multivector.scalar(qs.half)
    w = qs.basis_vector(1)
    assert SC.clifford_act(qs, w, one) == Multivector.gen(qs.half, 1)
    xi = qs.basis_vector(qs.half + 1)
    assert SC.clifford_act(qs, xi, Multivector.gen(qs.half, 1)) == one
    assert SC.clifford_act(qs, xi, Multivector.gen(qs.half, 0)).is_zero()


@pytest.mark.parametrize("n", [1, 2])
def test_clifford_relation_exhaustive(n):
    qs = SC.QuadSpace(n)
    basis = [qs.basis_vector(i) for i in range(qs.rank)]
    for v, w in itertools.product(basis, repeat=2):
        for s in qs.spinor_basis():
            lhs = SC.clifford_act(qs, v, SC.clifford_act(qs, w, s)) + SC.clifford_act(qs, w, SC.clifford_act(qs, v, s))
            assert lhs == s.scale(qs.pairing(v, w))


def test_square_is_half_the_norm():
    qs = SC.QuadSpace(2)
    v = [mpq(1), mpq(2), ZERO, mpq(-1), mpq(3), ZERO, mpq(1, 2), mpq(5)]
    s = Multivector(qs.half, {0: 1, 3: 2, 9: -1})
    assert SC.clifford_act(qs, v, SC.clifford_act(qs, v, s)) == s.scale(qs.pairing(v, v) / 2)


def test_exp2form_trivial(flagship):
    qs = flagship.qs
    g = SC.exp2form_action(qs, flagship.rm.theta, lam=0)
    assert la.equal(g.rho, la.identity(qs.rank))
    s = Multivector(qs.half, {5: 1, 6: 3})
    assert g.m(s) == s


def test_exp2form_g0(flagship):
    qs = flagship.qs
    spec = flagship.spec
    th = flagship.rm.theta
    g0 = SC.exp2form_action(qs, th, lam=spec.sqrt_mq, eta_hat=flagship.rm.eta_hat_sqrt_t)
    one = Multivector.scalar(qs.half)
    assert g0.m(one) == exp_truncated(th.scale(spec.sqrt_mq))
    # isometry and equivariance m_g(m(v) s) = m(rho_g v)(m_g s)
    G = qs.gram()
    assert la.equal(la.matmul(la.transpose(g0.rho), la.matmul(G, g0.rho)), G)
    s = Multivector(qs.half, {0: 1, 3: 2, 17: -1})
    for i in (0, 5, qs.half, qs.half + 3, qs.rank - 1):
        v = qs.basis_vector(i)
        assert g0.m(SC.clifford_act(qs, v, s)) == SC.clifford_act(qs, g0.act_V(v), g0.m(s))
    # the upper-right block is -sqrt(-q) times the contraction by Theta
    h = qs.half
    C = flagship.rm.contraction
    for i in range(h):
        for j in range(h):
            assert g0.rho[i][h + j] == -spec.sqrt_mq * C[i][j]


def test_exp2form_rejects_incompatible_form(flagship):
    qs = flagship.qs
    bad = Multivector.monomial(qs.half, [0, 2])
    with pytest.raises(NotFCompatible):
        SC.exp2form_action(qs, bad, lam=1, eta_hat=flagship.rm.eta_hat_sqrt_t)


def test_pure_spinors_of_coordinate_subspaces():
    qs = SC.QuadSpace(2)
    h = qs.half
    W2 = [qs.basis_vector(h + i) for i in range(h)]
    W1 = [qs.basis_vector(i) for i in range(h)]
    assert SC.pure_spinor_of(qs, W2) == Multivector.scalar(h)
    assert SC.pure_spinor_of(qs, W1) == qs.top()
    assert SC.spinor_parity(qs.top()) == 0


def test_graph_subspace_has_g0_spinor(flagship):
    qs = flagship.qs
    spec = flagship.spec
    g0 = SC.exp2form_action(qs, flagship.rm.theta, lam=spec.sqrt_mq)
    W = [g0.act_V(qs.basis_vector(qs.half + i)) for i in range(qs.half)]
    s = SC.pure_spinor_of(qs, W)
    expect = SC.normalize_line(g0.m(Multivector.scalar(qs.half)))
    assert s == expect


def test_pure_spinor_errors():
    qs = SC.QuadSpace(1)
    with pytest.raises(NotIsotropic):
        SC.pure_spinor_of(qs, [[1, 0, 1, 0]])
    with pytest.raises(NotMaximal):
        SC.pure_spinor_of(qs, [[1, 0, 0, 0]])


def test_annihilators():
    qs = SC.QuadSpace(2)
    h = qs.half
    one = Multivector.scalar(h)
    ann = Subspace(qs.rank, [SC.list_to_dict(v) for v in SC.annihilator_of(qs, one)])
    W2 = Subspace(qs.rank, [{h + i: 1} for i in range(h)])
    assert ann.equals(W2)
    assert SC.annihilator_of(qs, one + qs.top()) == []
    th = Multivector.monomial(h, [0, 1]) + Multivector.monomial(h, [2, 3])
    assert SC.is_pure(qs, exp_truncated(th))
    s = exp_truncated(th.scale(3))
    assert SC.pure_spinor_of(qs, SC.annihilator_of(qs, s)) == SC.normalize_line(s)


def test_ell_t_factors_over_real_embeddings(flagship):
    spec = flagship.spec
    for T in S.cm_types(flagship):
        parts = [exp_truncated(flagship.theta_hat[st].scale(spec.sqrt_mq * s))
                 for st, s in zip(real_embeddings(spec), T.signs)]
        assert S.ell_T(flagship, T) == wedge(parts[0], parts[1])


def test_g_sigma_hat_action_and_square(any_ctx):
    """The square is +1 for every even d tested (the sign is recorded in the notes)."""
    qs = any_ctx.qs
    spinors = [Multivector(qs.half, {0: 1, 3: -2}), Multivector(qs.half, {1: 1, (1 << qs.half) - 1: 4})]
    for st in real_embeddings(any_ctx.spec):
        g = sigma_hat_element(any_ctx, st)
        for v in any_ctx.V_hat[st]:
            assert la.matvec(g.rho, v) == [-c for c in v]
        for st2 in real_embeddings(any_ctx.spec):
            if st2 != st:
                for v in any_ctx.V_hat[st2]:
                    assert la.matvec(g.rho, v) == v
        for s in spinors:
            assert g.m(g.m(s)) == s


def test_spin_sample_identity_factor(flagship):
    qs = flagship.qs
    v = flagship.V_sigma[(1, 1)][0]
    g = SC.nilpotent_pair(qs, v, [ZERO] * qs.rank)
    assert la.equal(g.rho, la.identity(qs.rank))
    s = Multivector(qs.half, {0: 1, 7: 2})
    assert g.m(s) == s


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_spin_sample_properties(flagship, seed):
    g = SC.spin_sample(flagship, seed)
    G = flagship.gram
    assert la.equal(la.matmul(la.transpose(g.rho), la.matmul(G, g.rho)), G)
    for T in S.cm_types(flagship):
        ell = S.ell_T(flagship, T)
        assert g.m(ell) == ell
    for sigma, basis in flagship.V_sigma.items():
        assert la.det(restricted(g.rho, basis)) == 1
    for s in (flagship.eta_sqrt_t, flagship.eta_sqrt_mq):
        assert la.equal(la.matmul(g.rho, s), la.matmul(s, g.rho))


def test_tau_involution_on_b(flagship):
    sb = S.secant_basis(flagship)
    for v in sb.vectors:
        assert sb.space.member(dict(SC.tau_involution(v).terms))
