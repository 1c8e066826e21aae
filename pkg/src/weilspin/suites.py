"""Randomized and exhaustive invariant families used by ``weilspin suite`` and the tests.

Every family is a function ``(ctx, rng, cases) -> FamilyResult``. Random
inputs are small integers so all arithmetic stays exact and fast. A family
stops at its first failure and records the offending input.
"""

from __future__ import annotations

import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from gmpy2 import mpq

from . import hodge as H
from . import linalg as la
from . import orlov as O
from . import secant as S
from . import spinclifford as SC
from .errors import ZeroRank
from .exterior import Multivector, Subspace, power, tau, wedge
from .fieldtower import TowerElt, coeff_to_json, real_embeddings, simplify
from .weilstructure import WeilContext, build_context


@dataclass
class FamilyResult:
    name: str
    statement: str
    cases: int = 0
    passed: bool = True
    skipped: str | None = None
    counterexample: dict | None = None

    def fail(self, **payload) -> "FamilyResult":
        self.passed = False
        self.counterexample = payload
        return self

    def to_json(self) -> dict:
        out = {"cases": self.cases, "passed": self.passed, "statement": self.statement}
        if self.skipped:
            out["skipped"] = self.skipped
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


# ---------------------------------------------------------------------------
# random inputs
# ---------------------------------------------------------------------------
def rand_rational_vector(rng: random.Random, n: int, r: int = 3) -> list:
    return [mpq(rng.randint(-r, r)) for _ in range(n)]


def rand_K(ctx: WeilContext, rng: random.Random, r: int = 3, minus: bool = False) -> TowerElt:
    spec = ctx.spec
    while True:
        a = 0 if minus else rng.randint(-r, r)
        c = rng.randint(-r, r)
        b = d = 0
        if spec.t:
            b = 0 if minus else rng.randint(-r, r)
            d = rng.randint(-r, r)
        x = spec.elt(a, b, c, d)
        if not x.is_zero():
            return x


def rand_spinor(rng: random.Random, rank: int, terms: int = 6, r: int = 3) -> Multivector:
    masks = rng.sample(range(1 << rank), min(terms, 1 << rank))
    return Multivector(rank, {m: mpq(rng.randint(1, r) * rng.choice((1, -1))) for m in masks})


def rand_combo(rng: random.Random, basis: list, r: int = 3) -> list:
    """Random non-zero integer combination of vectors given as lists."""
    n = len(basis[0])
    while True:
        v = [mpq(0)] * n
        for b in basis:
            c = rng.randint(-r, r)
            if c:
                v = [simplify(x + c * y) for x, y in zip(v, b)]
        if any(v):
            return v


def rand_B(ctx: WeilContext, rng: random.Random, r: int = 3) -> Multivector:
    sb = S.secant_basis(ctx)
    while True:
        coeffs = [mpq(rng.randint(-r, r)) for _ in range(sb.dim)]
        if any(coeffs):
            return sb.combine(coeffs)


def _vec_json(v) -> list:
    return [coeff_to_json(c) for c in v]


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------
def clifford_relation(ctx, rng, cases):
    """m(v) m(w) + m(w) m(v) = (v, w) on S, checked on random v, w, s."""
    res = FamilyResult("clifford_relation", "v w + w v acts on spinors as the scalar (v, w)")
    qs = ctx.qs
    for _ in range(cases):
        v = rand_rational_vector(rng, qs.rank)
        w = rand_rational_vector(rng, qs.rank)
        s = rand_spinor(rng, qs.half)
        lhs = SC.clifford_act(qs, v, SC.clifford_act(qs, w, s)) + SC.clifford_act(qs, w, SC.clifford_act(qs, v, s))
        res.cases += 1
        if lhs != s.scale(qs.pairing(v, w)):
            return res.fail(v=_vec_json(v), w=_vec_json(w), s=s.to_json())
    return res


def v_hat_orthogonality(ctx, rng, cases):
    """(V_sigma, V_sigma') = 0 unless sigma' is the conjugate of sigma; hence the V_sigma-hat are orthogonal."""
    res = FamilyResult("v_hat_orthogonality", "eigenspaces of eta pair only with their conjugates")
    qs = ctx.qs
    keys = list(ctx.V_sigma)
    for _ in range(cases):
        s1, s2 = rng.choice(keys), rng.choice(keys)
        x = rand_combo(rng, ctx.V_sigma[s1])
        y = rand_combo(rng, ctx.V_sigma[s2])
        p = qs.pairing(x, y)
        res.cases += 1
        if s2 != (s1[0], -s1[1]) and p:
            return res.fail(sigma=list(s1), sigma_prime=list(s2), x=_vec_json(x), y=_vec_json(y))
    if ctx.spec.t:
        hats = [ctx.V_hat[st] for st in real_embeddings(ctx.spec)]
        for _ in range(cases):
            x, y = rand_combo(rng, hats[0]), rand_combo(rng, hats[1])
            res.cases += 1
            if qs.pairing(x, y):
                return res.fail(x=_vec_json(x), y=_vec_json(y))
    return res


def eta_adjoint(ctx, rng, cases):
    res = FamilyResult("eta_adjoint", "(eta(lam) x, y) = (x, eta(iota lam) y)")
    qs = ctx.qs
    for _ in range(cases):
        lam = rand_K(ctx, rng)
        x = rand_rational_vector(rng, qs.rank)
        y = rand_rational_vector(rng, qs.rank)
        lhs = qs.pairing(la.matvec(ctx.eta_matrix(lam), x), y)
        rhs = qs.pairing(x, la.matvec(ctx.eta_matrix(lam.iota()), y))
        res.cases += 1
        if lhs != rhs:
            return res.fail(lam=lam.to_json(), x=_vec_json(x), y=_vec_json(y))
    return res


def xi_antisymmetry(ctx, rng, cases):
    res = FamilyResult("xi_antisymmetry", "Xi_s is alternating and Xi_s(eta(f) x, y) = Xi_s(x, eta(f) y) for f in F")
    n = ctx.rank
    for _ in range(cases):
        s = rand_K(ctx, rng, minus=True)
        f = rand_K(ctx, rng)
        f = simplify(f + f.iota())  # an element of F
        if not isinstance(f, TowerElt):
            f = TowerElt(ctx.spec, f)
        B = ctx.xi_matrix(s)
        x, y = rand_rational_vector(rng, n), rand_rational_vector(rng, n)
        xy = la.bilinear(B, x, y)
        yx = la.bilinear(B, y, x)
        ef = ctx.eta_matrix(f) if not f.is_zero() else la.zeros(n)
        compat = la.bilinear(B, la.matvec(ef, x), y) == la.bilinear(B, x, la.matvec(ef, y))
        res.cases += 1
        if simplify(xy + yx) or not compat:
            return res.fail(s=s.to_json(), f=f.to_json(), x=_vec_json(x), y=_vec_json(y))
    return res


def _isotropic_vector(ctx, rng, t):
    cert = ctx.split_certificate(t)
    w = [mpq(0)] * ctx.rank
    for y in cert:
        k = rand_K(ctx, rng, r=2)
        w = [simplify(a + b) for a, b in zip(w, la.matvec(ctx.eta_matrix(k), y))]
    return w


def _iota(c):
    return simplify(c.iota()) if isinstance(c, TowerElt) else c


def hermitian_ht(ctx, rng, cases):
    res = FamilyResult(
        "hermitian_ht",
        "H_t(x, y) = iota H_t(y, x), H_t is K-linear in y, and invariant under eta-commuting isometries",
    )
    n = ctx.rank
    for i in range(cases):
        t = rand_K(ctx, rng, minus=True)
        lam = rand_K(ctx, rng)
        x, y = rand_rational_vector(rng, n), rand_rational_vector(rng, n)
        h = ctx.hermitian_Ht(t, x, y)
        herm = h == _iota(ctx.hermitian_Ht(t, y, x))
        lin = ctx.hermitian_Ht(t, x, la.matvec(ctx.eta_matrix(lam), y)) == simplify(lam * h)
        ok = herm and lin
        if ok and i % 4 == 0:
            rho = H.unipotent_isometry(ctx, t, _isotropic_vector(ctx, rng, t))
            ok = ctx.hermitian_Ht(t, la.matvec(rho, x), la.matvec(rho, y)) == h
        res.cases += 1
        if not ok:
            return res.fail(t=t.to_json(), lam=lam.to_json(), x=_vec_json(x), y=_vec_json(y))
    # spin_sample elements preserve (.,.)_V and commute with eta(sqrt t), hence preserve H_t
    for _ in range(max(1, cases // 10)):
        g = SC.spin_sample(ctx, rng.randrange(1 << 30))
        rho = g.rho
        ok = la.equal(la.matmul(la.transpose(rho), la.matmul(ctx.gram, rho)), ctx.gram) and H.commutes_with_eta(ctx, rho)
        res.cases += 1
        if not ok:
            return res.fail(spin_sample=g.label)
    return res


def ell_purity_independence(ctx, rng, cases):
    res = FamilyResult("ell_purity_independence", "each l_T is pure with annihilator W_T of rank 2n; the l_T are independent")
    ells = S.ell_all(ctx)
    for T, ell in ells.items():
        ann = SC.annihilator_of(ctx.qs, ell)
        W = Subspace(ctx.rank, [SC.list_to_dict(v) for v in ctx.W_T(T)])
        A = Subspace(ctx.rank, [SC.list_to_dict(v) for v in ann])
        res.cases += 1
        if len(ann) != 2 * ctx.n or not A.equals(W):
            return res.fail(T=T.label(), annihilator_dim=len(ann))
    span = Subspace(None, [dict(x.terms) for x in ells.values()])
    res.cases += 1
    if span.dim != len(ells):
        return res.fail(span_dim=span.dim, count=len(ells))
    return res


def filtration_projection(ctx, rng, cases):
    res = FamilyResult(
        "filtration_projection",
        "phi-check(l_T x l_T') starts in degree dk on wedge(W_T cap W_T'); varphi~ ends in degree d(e-k) on wedge(W_T + W_T')",
    )
    types = S.cm_types(ctx)
    for T in types:
        for U in types:
            chk = O.filtration_check(ctx, T, U)
            res.cases += 1
            if not chk.ok:
                return res.fail(T=T.label(), U=U.label(), **{k: v for k, v in vars(chk).items()})
    return res


def mukai_inversion(ctx, rng, cases):
    res = FamilyResult("mukai_inversion", "phi_P^ o phi_P = (-1)^n (-1)^* on every basis class of H*(X)")
    h, n = ctx.h, ctx.n
    for m in range(1 << h):
        x = Multivector(h, {m: mpq(1)})
        y = O.fm_poincare(O.fm_poincare(x, "X_to_Xhat"), "Xhat_to_X")
        res.cases += 1
        if y != O.minus_one_pullback(x).scale((-1) ** n):
            return res.fail(monomial=m)
    return res


def spin_fixes_b(ctx, rng, cases):
    res = FamilyResult("spin_fixes_b", "spin_sample fixes B and kappa(phi-check(c)) for c in B x B vectorwise")
    sb = S.secant_basis(ctx)
    d = ctx.d
    gs = [SC.spin_sample(ctx, rng.randrange(1 << 30)) for _ in range(max(1, cases // 10))]
    for g in gs:
        for v in sb.vectors:
            res.cases += 1
            if g.m(v) != v:
                return res.fail(spin_sample=g.label, vector=v.to_json())
    kappas = []
    while len(kappas) < 10:
        x, y = rand_B(ctx, rng), rand_B(ctx, rng)
        try:
            kappas.append(O.kappa(O.phi_check_box(x, y, grades=(0, d)), max_grade=d))
        except ZeroRank:
            continue
    for idx in range(cases):
        g = gs[idx % len(gs)]
        k = kappas[idx % len(kappas)]
        res.cases += 1
        if g.act_wedge(k) != k:
            return res.fail(spin_sample=g.label, kappa=k.to_json())
    return res


def g_sigma_hat(ctx, rng, cases):
    res = FamilyResult("g_sigma_hat", "rho(g_sigma-hat) is -1 on V_sigma-hat and +1 elsewhere; g_sigma-hat squares to +1")
    qs = ctx.qs
    for st in real_embeddings(ctx.spec):
        g = sigma_hat_element(ctx, st)
        for st2 in real_embeddings(ctx.spec):
            sign = -1 if st2 == st else 1
            for v in ctx.V_hat[st2]:
                res.cases += 1
                if la.matvec(g.rho, v) != [simplify(sign * c) for c in v]:
                    return res.fail(sigma_hat=st, on=st2)
        for _ in range(cases):
            s = rand_spinor(rng, qs.half)
            res.cases += 1
            if g.m(g.m(s)) != s:
                return res.fail(sigma_hat=st, spinor=s.to_json())
    return res


def sigma_hat_element(ctx, st: int) -> SC.OperatorPair:
    """g_sigma-hat from the isotropic splitting V_sigma-hat = V_sigma + V_sigma-bar."""
    return SC.g_sigma_element(ctx.qs, ctx.V_sigma[(st, 1)], ctx.V_sigma[(st, -1)])


def primitivity(ctx, rng, cases):
    res = FamilyResult("primitivity", "h^{1 + d(e-2)/2} ^ x = 0 for h in A^2 and x in HW")
    if ctx.d <= 2:
        res.skipped = "needs d > 2"
        return res
    exp = 1 + ctx.d * (ctx.e - 2) // 2
    hs = []
    for _ in range(max(1, cases // 10)):
        coeffs = [rng.randint(-3, 3) for _ in ctx.A2]
        if not any(coeffs):
            coeffs[0] = 1
        h = Multivector.zero(ctx.rank)
        for c, a in zip(coeffs, ctx.A2):
            h = h + a.scale(c)
        hs.append((coeffs, power(h, exp)))
    for idx in range(cases):
        coeffs, hp = hs[idx % len(hs)]
        x = Multivector.zero(ctx.rank)
        for b in ctx.HW_basis:
            x = x + b.scale(rng.randint(-3, 3))
        res.cases += 1
        if not wedge(hp, x).is_zero():
            return res.fail(h_coeffs=coeffs, x=x.to_json())
    return res


def tau_b(ctx, rng, cases):
    res = FamilyResult("tau_b", "tau(B) = B")
    sb = S.secant_basis(ctx)
    for _ in range(cases):
        x = rand_B(ctx, rng)
        res.cases += 1
        if not sb.space.member(dict(tau(x).terms)):
            return res.fail(x=x.to_json())
    return res


def _fixture(ctx):
    def build():
        rm, I = H.builtin_fixture(ctx.spec, ctx.d)
        return build_context(ctx.spec, rm, ctx.d), I
    return ctx.memo(("hodge_fixture",), build)


def hodge_b_weil(ctx, rng, cases):
    res = FamilyResult("hodge_b_weil", "B and HW consist of Hodge classes for the fixture, whose Weil dims are d/2")
    fctx, I = _fixture(ctx)
    for v in fctx.HW_basis:
        res.cases += 1
        if not H.hodge_type_test(I, v):
            return res.fail(hw_vector=v.to_json())
    for _ in range(cases):
        x = rand_B(fctx, rng)
        res.cases += 1
        if not H.hodge_type_test(I, x):
            return res.fail(x=x.to_json())
    for _ in range(max(1, cases // 10)):
        rho = H.unipotent_isometry(fctx, I.t, _isotropic_vector(fctx, rng, I.t))
        J = I.conjugate_by(rho)
        res.cases += 1
        if not H.weil_balanced(H.weil_condition(fctx, J), fctx.d):
            return res.fail(conjugated=J.to_json())
    return res


def split_certificate(ctx, rng, cases):
    res = FamilyResult("split_certificate", "the certificate spans a d/2-dimensional H_t-isotropic K-subspace")
    for _ in range(cases):
        t = rand_K(ctx, rng, minus=True)
        cert = ctx.split_certificate(t)
        res.cases += 1
        if len(cert) != ctx.d // 2 or any(ctx.hermitian_Ht(t, a, b) for a in cert for b in cert):
            return res.fail(t=t.to_json())
    return res


def g_positivity(ctx, rng, cases):
    res = FamilyResult("g_positivity", "g_I is positive definite for the found t and not for -t, also after conjugation")
    fctx, I = _fixture(ctx)
    t = I.t
    if not H.omega_membership(fctx, I, t).member or H.omega_membership(fctx, I, -t).member:
        return res.fail(t=t.to_json())
    res.cases += 1
    for _ in range(cases):
        rho = H.unipotent_isometry(fctx, t, _isotropic_vector(fctx, rng, t))
        J = I.conjugate_by(rho)
        res.cases += 1
        if not H.omega_membership(fctx, J, t).member or H.omega_membership(fctx, J, -t).member:
            return res.fail(conjugated=J.to_json(), t=t.to_json())
    return res


FAMILIES: dict[str, Callable] = {
    f.__name__: f
    for f in (
        clifford_relation,
        ell_purity_independence,
        eta_adjoint,
        filtration_projection,
        g_positivity,
        g_sigma_hat,
        hermitian_ht,
        hodge_b_weil,
        mukai_inversion,
        primitivity,
        spin_fixes_b,
        split_certificate,
        tau_b,
        v_hat_orthogonality,
        xi_antisymmetry,
    )
}


# families that enumerate a finite case set instead of sampling
EXHAUSTIVE = frozenset({"ell_purity_independence", "filtration_projection", "mukai_inversion"})


def family_rng(seed: int, name: str) -> random.Random:
    return random.Random(f"{seed}:{name}")


def run_family(ctx: WeilContext, name: str, seed: int = 0, cases: int = 100) -> FamilyResult:
    return FAMILIES[name](ctx, family_rng(seed, name), cases)


def thread_cap() -> int:
    raw = os.environ.get("WEILSPIN_THREADS")
    if raw:
        return max(1, int(raw))
    return min(4, os.cpu_count() or 1)


def _warm(ctx: WeilContext) -> None:
    """Build shared caches once before families run concurrently."""
    S.secant_basis(ctx)
    S.ell_all(ctx)
    ctx.V_sigma, ctx.V_hat, ctx.HW_basis, ctx.A2


def run_suites(ctx: WeilContext, names=None, seed: int = 0, cases: int = 100) -> dict:
    """Run the named families (all by default); results keyed alphabetically."""
    names = sorted(FAMILIES if names is None else names)
    unknown = [n for n in names if n not in FAMILIES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    _warm(ctx)
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        futures = {n: pool.submit(run_family, ctx, n, seed, cases) for n in names}
        return {n: futures[n].result() for n in names}
