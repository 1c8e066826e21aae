"""Clifford action of V = H^1(X) + H^1(X^) on spinors S = wedge^* H^1(X).

Coordinates on V: indices 0..2n-1 are the generators a_i of W1 = H^1(X),
indices 2n..4n-1 the dual basis b_i of W2 = H^1(X^). The pairing is
(a_i, b_j) = delta_ij and m(w, xi) s = w ^ s + xi _| s.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from gmpy2 import mpq

from . import linalg as la
from .errors import NotFCompatible, NotIsotropic, NotMaximal
from .exterior import Multivector, Subspace, contract, exp_truncated, kernel, tau, wedge
from .fieldtower import ONE, ZERO, coeff_inv, simplify


@dataclass(frozen=True)
class QuadSpace:
    """V = W1 + W2 of rank 4n with the standard hyperbolic pairing."""

    n: int

    @property
    def rank(self) -> int:
        return 4 * self.n

    @property
    def half(self) -> int:
        return 2 * self.n

    def pairing(self, x: Sequence, y: Sequence):
        h = self.half
        s = ZERO
        for i in range(h):
            if x[i] and y[h + i]:
                s = s + x[i] * y[h + i]
            if x[h + i] and y[i]:
                s = s + x[h + i] * y[i]
        return simplify(s)

    def gram(self) -> la.Matrix:
        h = self.half
        g = la.zeros(self.rank)
        for i in range(h):
            g[i][h + i] = ONE
            g[h + i][i] = ONE
        return g

    def basis_vector(self, i: int) -> list:
        v = [ZERO] * self.rank
        v[i] = ONE
        return v

    def split(self, v: Sequence) -> tuple[dict, dict]:
        h = self.half
        w = {i: v[i] for i in range(h) if v[i]}
        xi = {i: v[h + i] for i in range(h) if v[h + i]}
        return w, xi

    def spinor_basis(self) -> list[Multivector]:
        return [Multivector(self.half, {m: ONE}) for m in range(1 << self.half)]

    def top(self) -> Multivector:
        return Multivector(self.half, {(1 << self.half) - 1: ONE})


def clifford_act(qs: QuadSpace, v: Sequence, s: Multivector) -> Multivector:
    """m(w, xi)(s) = w ^ s + xi _| s."""
    w, xi = qs.split(v)
    out = Multivector.zero(qs.half)
    if w:
        out = out + wedge(Multivector.vector(qs.half, w), s)
    if xi:
        out = out + contract(xi, s)
    return out


def spinor_parity(s: Multivector) -> int | None:
    """0 for even, 1 for odd, None for mixed (or zero)."""
    par = {m.bit_count() % 2 for m in s.terms}
    return par.pop() if len(par) == 1 else None


# ---------------------------------------------------------------------------
# operator pairs
# ---------------------------------------------------------------------------

@dataclass
class OperatorPair:
    """A spin element stored through its actions: m on S and rho on V.

    ``extend`` optionally gives the action of rho on all of wedge^* V
    (used for large multivectors where the functorial image of a dense
    matrix would be too costly).
    """

    m: Callable[[Multivector], Multivector]
    rho: la.Matrix
    label: str = ""
    extend: Callable[[Multivector], Multivector] | None = None
    factors: list = field(default_factory=list)

    def act_V(self, v: Sequence) -> list:
        return la.matvec(self.rho, v)

    def act_wedge(self, x: Multivector) -> Multivector:
        if self.extend is not None:
            return self.extend(x)
        from .exterior import substitute

        images = [Multivector.vector(x.rank, col) for col in la.transpose(self.rho)]
        return substitute(images, x)


def exp2form_action(qs: QuadSpace, theta2: Multivector, lam=1, eta_hat: la.Matrix | None = None) -> OperatorPair:
    """Cup product with exp(lam * theta2) and its isometry rho(w, xi) = (w - lam xi _| theta2, xi)."""
    h = qs.half
    cmat = contraction_matrix(theta2, h)
    if eta_hat is not None:
        lhs = la.matmul(eta_hat, cmat)
        rhs = la.matmul(cmat, la.transpose(eta_hat))
        if not la.equal(lhs, rhs):
            raise NotFCompatible("2-form is not compatible with the F-action")
    ex = exp_truncated(theta2.scale(lam)) if lam else Multivector.scalar(h)
    rho = la.identity(qs.rank)
    for i in range(h):
        for j in range(h):
            if cmat[i][j]:
                rho[i][h + j] = simplify(-lam * cmat[i][j])

    def m(s: Multivector) -> Multivector:
        return wedge(ex, s)

    return OperatorPair(m=m, rho=rho, label="exp2form")


def contraction_matrix(theta2: Multivector, h: int) -> la.Matrix:
    """Matrix of xi -> xi _| theta2 from W2 (dual coordinates) to W1."""
    cmat = la.zeros(h)
    for j in range(h):
        img = contract({j: ONE}, theta2)
        for m, c in img.terms.items():
            if m.bit_count() != 1:
                raise ValueError("contraction matrix needs a 2-form")
            cmat[m.bit_length() - 1][j] = c
    return cmat


# ---------------------------------------------------------------------------
# pure spinors
# ---------------------------------------------------------------------------

def check_isotropic(qs: QuadSpace, vectors: Sequence[Sequence]) -> None:
    for i, x in enumerate(vectors):
        for y in vectors[i:]:
            if qs.pairing(x, y):
                raise NotIsotropic("subspace is not totally isotropic")


def pure_spinor_of(qs: QuadSpace, W: Sequence[Sequence]) -> Multivector:
    """Generator of {s : m(v) s = 0 for all v in W} for maximal isotropic W.

    The Clifford product of a basis of W applied to a suitable basis spinor
    lands in that line; we scan the monomial basis for a non-zero image.
    """
    basis = Subspace(qs.rank, [list_to_dict(v) for v in W])
    if basis.dim != len(W):
        W = [dict_to_list(r, qs.rank) for r in basis.rows]
    check_isotropic(qs, W)
    if len(W) != qs.half:
        raise NotMaximal(f"isotropic subspace of dim {len(W)}, need {qs.half}")
    order = sorted(range(1 << qs.half), key=lambda m: (-m.bit_count(), m))
    for mask in order:
        s = Multivector(qs.half, {mask: ONE})
        for v in reversed(W):
            s = clifford_act(qs, v, s)
            if s.is_zero():
                break
        if s:
            return normalize_line(s)
    raise NotMaximal("no pure spinor found")  # unreachable for maximal isotropic W


def normalize_line(s: Multivector) -> Multivector:
    """Scale so that the coefficient at the smallest mask is 1."""
    if s.is_zero():
        return s
    m0 = min(s.terms)
    return s.scale(coeff_inv(s.terms[m0]))


def annihilator_of(qs: QuadSpace, s: Multivector) -> list[list]:
    """Basis of {v in V : m(v) s = 0}."""
    images = [clifford_act(qs, qs.basis_vector(k), s) for k in range(qs.rank)]
    out = []
    for rel in kernel(images):
        v = [ZERO] * qs.rank
        for k, c in rel.items():
            v[k] = c
        out.append(v)
    return out


def is_pure(qs: QuadSpace, s: Multivector) -> bool:
    return len(annihilator_of(qs, s)) == qs.half


def subspace_line(qs: QuadSpace, U: Sequence[Sequence]) -> Multivector:
    """A generator of the line wedge^top U inside wedge^* V.

    Small subspaces are wedged directly. Large ones use the interior product
    of the volume form with the covectors (u', .) for u' in U^perp, which
    span the annihilator of U.
    """
    basis = Subspace(qs.rank, [list_to_dict(v) for v in U])
    rows = [dict_to_list(r, qs.rank) for r in basis.rows]
    if 2 * len(rows) <= qs.rank:
        out = Multivector.scalar(qs.rank)
        for v in rows:
            out = wedge(out, Multivector.vector(qs.rank, v))
        return out
    gram = qs.gram()
    perp = la.nullspace([la.matvec(gram, v) for v in rows]) if rows else [qs.basis_vector(i) for i in range(qs.rank)]
    out = Multivector(qs.rank, {(1 << qs.rank) - 1: ONE})
    for v in perp:
        out = contract(la.matvec(gram, v), out)
    return out


def list_to_dict(v: Sequence) -> dict:
    return {i: c for i, c in enumerate(v) if c}


def dict_to_list(v: dict, n: int) -> list:
    out = [ZERO] * n
    for i, c in v.items():
        out[i] = c
    return out


# ---------------------------------------------------------------------------
# Clifford words and sample elements
# ---------------------------------------------------------------------------

def vector_word(qs: QuadSpace, vectors: Sequence[Sequence], label: str = "word") -> OperatorPair:
    """The element e_1 e_2 ... e_k for anisotropic vectors e_i.

    m acts by m(e_1) o ... o m(e_k); rho is the composite of the twisted
    adjoint actions x -> e x e^{-1} = -(reflection in e), computed independently.
    """
    rho = la.identity(qs.rank)
    gram = qs.gram()
    for e in vectors:
        ee = qs.pairing(e, e)
        if not ee:
            raise ValueError("vector_word needs anisotropic vectors")
        # x -> -x + 2 (x, e) / (e, e) * e
        ge = la.matvec(gram, e)
        k = 2 * coeff_inv(ee)
        refl = [[simplify((-ONE if i == j else ZERO) + k * e[i] * ge[j]) for j in range(qs.rank)] for i in range(qs.rank)]
        rho = la.matmul(rho, refl)

    def m(s: Multivector) -> Multivector:
        for e in reversed(vectors):
            s = clifford_act(qs, e, s)
        return s

    return OperatorPair(m=m, rho=rho, label=label, factors=list(vectors))


def hyperbolic_orthogonal_basis(qs: QuadSpace, L: Sequence[Sequence], Lp: Sequence[Sequence]) -> list[list]:
    """Orthogonal basis u_i +- v_i of L + L' with (e, e) = +-2.

    L and L' are totally isotropic and in perfect duality; v_i is the basis
    of L' dual to the given basis u_i of L.
    """
    k = len(L)
    if len(Lp) != k:
        raise ValueError("L and L' must have equal dimension")
    pair = [[qs.pairing(u, w) for w in Lp] for u in L]
    inv = la.inverse(pair)
    # v_i = sum_j inv[j][i] w_j satisfies (u_a, v_i) = delta
    duals = []
    for i in range(k):
        v = [ZERO] * qs.rank
        for j in range(k):
            c = inv[j][i]
            if c:
                v = [simplify(x + c * y) for x, y in zip(v, Lp[j])]
        duals.append(v)
    out = []
    for u, v in zip(L, duals):
        out.append([simplify(x + y) for x, y in zip(u, v)])
        out.append([simplify(x - y) for x, y in zip(u, v)])
    return out


def g_sigma_element(qs: QuadSpace, L: Sequence[Sequence], Lp: Sequence[Sequence]) -> OperatorPair:
    """g = product of an orthogonal basis of L + L' with (e, e) = +-2."""
    basis = hyperbolic_orthogonal_basis(qs, L, Lp)
    return vector_word(qs, basis, label="g_sigma_hat")


def tau_involution(x: Multivector) -> Multivector:
    return tau(x)


def nilpotent_pair(qs: QuadSpace, v: Sequence, vp: Sequence) -> OperatorPair:
    """g = 1 + v v' for isotropic, mutually orthogonal v, v'.

    m_g = id + m(v) m(v'); rho_g(x) = x + (x, v') v - (x, v) v'.
    """
    if qs.pairing(v, v) or qs.pairing(vp, vp) or qs.pairing(v, vp):
        raise NotIsotropic("nilpotent factor needs isotropic orthogonal v, v'")
    gram = qs.gram()
    gv = la.matvec(gram, v)
    gvp = la.matvec(gram, vp)
    n = qs.rank
    rho = [[simplify((ONE if i == j else ZERO) + v[i] * gvp[j] - vp[i] * gv[j]) for j in range(n)] for i in range(n)]

    def m(s: Multivector) -> Multivector:
        return s + clifford_act(qs, v, clifford_act(qs, vp, s))

    def extend(x: Multivector) -> Multivector:
        return exp_nilpotent_derivation(x, v, gvp, vp, gv)

    return OperatorPair(m=m, rho=rho, label="1+vv'", extend=extend, factors=[(list(v), list(vp))])


def exp_nilpotent_derivation(x: Multivector, v, alpha, vp, beta) -> Multivector:
    """Apply wedge^*(1 + N) for N = v (x) alpha - v' (x) beta with N^2 = 0.

    This equals 1 + D + D^2 / 2 for the derivation D(y) = v ^ (alpha _| y) - v' ^ (beta _| y).
    """
    rank = x.rank
    V = Multivector.vector(rank, v)
    Vp = Multivector.vector(rank, vp)
    a = {i: c for i, c in enumerate(alpha) if c}
    b = {i: c for i, c in enumerate(beta) if c}

    def D(y: Multivector) -> Multivector:
        out = Multivector.zero(rank)
        if a:
            out = out + wedge(V, contract(a, y))
        if b:
            out = out - wedge(Vp, contract(b, y))
        return out

    d1 = D(x)
    d2 = D(d1)
    return x + d1 + d2.scale(mpq(1, 2))


def compose(pairs: Sequence[OperatorPair], label: str = "product") -> OperatorPair:
    """The product g_1 g_2 ... g_k (so g_k acts first)."""
    if not pairs:
        raise ValueError("empty product")
    rho = pairs[0].rho
    for p in pairs[1:]:
        rho = la.matmul(rho, p.rho)

    def m(s: Multivector) -> Multivector:
        for p in reversed(pairs):
            s = p.m(s)
        return s

    def extend(x: Multivector) -> Multivector:
        for p in reversed(pairs):
            x = p.act_wedge(x)
        return x

    factors = [f for p in pairs for f in p.factors]
    return OperatorPair(m=m, rho=rho, label=label, extend=extend, factors=factors)


def spin_sample(ctx, seed: int, factors: int = 2, coeff_range: int = 3) -> OperatorPair:
    """Random element of Spin(V_K~)_{eta,B}: a product of factors 1 + v v'.

    Each factor uses v in V_sigma and v' in V_sigma-bar with (v, v') = 0, so
    it commutes with eta(K), is unipotent on every V_sigma and fixes every l_T.
    """
    rng = random.Random(seed)
    qs = ctx.qs
    sigmas = list(ctx.V_sigma.keys())
    out = []
    for _ in range(factors):
        sigma = rng.choice(sigmas)
        sbar = (sigma[0], -sigma[1])
        A = ctx.V_sigma[sigma]
        Bb = ctx.V_sigma[sbar]
        v = _random_combo(rng, A, coeff_range, qs.rank)
        w = _random_combo(rng, Bb, coeff_range, qs.rank)
        vw = qs.pairing(v, w)
        if vw:
            # project w onto the orthogonal complement of v inside V_sigma-bar
            pivot = next(b for b in Bb if qs.pairing(v, b))
            k = vw * coeff_inv(qs.pairing(v, pivot))
            w = [simplify(x - k * y) for x, y in zip(w, pivot)]
        out.append(nilpotent_pair(qs, v, w))
    return compose(out, label=f"spin_sample(seed={seed})")


def _random_combo(rng: random.Random, basis: Sequence[Sequence], r: int, n: int) -> list:
    v = [ZERO] * n
    while all(not x for x in v):
        v = [ZERO] * n
        for b in basis:
            c = rng.randint(-r, r)
            if c:
                v = [simplify(x + c * y) for x, y in zip(v, b)]
    return v
