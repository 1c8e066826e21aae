"""Complex structures on V, Hodge types, the Weil condition and the domain Omega_{B,t}.

A complex structure is an exact 4n x 4n matrix I (entries in Q or F~) with
I^2 = -1. Hodge types are tested through the derivation extension of I:
a class of degree 2k is of type (k, k) exactly when that derivation kills it,
so nothing ever leaves the tower.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from gmpy2 import mpq

from . import linalg as la
from .errors import EtaIncompatible, FixtureSearchFailed, NotAMember, SearchExhausted
from .exterior import Multivector, Subspace, derivation
from .fieldtower import (
    CMType,
    TowerElt,
    TowerSpec,
    coeff_to_json,
    is_rational_square,
    rational_sqrt,
    real_embeddings,
    sign_at_embedding,
    simplify,
)
from .secant import cm_types, secant_basis, sigma_label
from .weilstructure import RMData, WeilContext, build_context, darboux_rm


@dataclass
class ComplexStructure:
    """I on V = H^1(X) + H^1(X^), optionally with the t that polarizes it."""

    matrix: la.Matrix
    t: TowerElt | None = None
    label: str = ""

    @property
    def size(self) -> int:
        return len(self.matrix)

    def square_is_minus_one(self) -> bool:
        return la.equal(la.matmul(self.matrix, self.matrix), la.scale(la.identity(self.size), -1))

    def __neg__(self) -> "ComplexStructure":
        return ComplexStructure(la.scale(self.matrix, -1), None, f"-{self.label}")

    def conjugate_by(self, rho: la.Matrix, rho_inv: la.Matrix | None = None) -> "ComplexStructure":
        """rho I rho^-1."""
        if rho_inv is None:
            rho_inv = la.inverse(rho)
        return ComplexStructure(la.matmul(rho, la.matmul(self.matrix, rho_inv)), self.t, f"conj({self.label})")

    def x_block(self) -> la.Matrix:
        """The H^1(X) block, defined only when I preserves H^1(X)."""
        h = self.size // 2
        if any(self.matrix[i][j] for i in range(h, self.size) for j in range(h)):
            raise ValueError("I does not preserve H^1(X)")
        return [row[:h] for row in self.matrix[:h]]

    def to_json(self) -> dict:
        out = {"matrix": [[coeff_to_json(c) for c in row] for row in self.matrix], "label": self.label}
        if self.t is not None:
            out["t"] = self.t.to_json()
        return out


def _as_matrix(I) -> la.Matrix:
    return I.matrix if isinstance(I, ComplexStructure) else I


# ---------------------------------------------------------------------------
# Hodge types
# ---------------------------------------------------------------------------
def hodge_type_test(I, x: Multivector) -> bool:
    """True iff x is of type (k, k): the derivation extension of I kills it.

    Classes on X (rank 2n) are tested with the H^1(X) block of I; classes on
    X x X^ (rank 4n) with I itself.
    """
    cs = I if isinstance(I, ComplexStructure) else ComplexStructure(I)
    if x.rank == cs.size:
        M = cs.matrix
    elif 2 * x.rank == cs.size:
        M = cs.x_block()
    else:
        raise ValueError(f"rank {x.rank} does not match I of size {cs.size}")
    images = [Multivector.vector(x.rank, [M[r][c] for r in range(len(M))]) for c in range(len(M))]
    return derivation(images, x).is_zero()


# ---------------------------------------------------------------------------
# the fixture
# ---------------------------------------------------------------------------
def _standard_rotation(rm: RMData) -> la.Matrix:
    """F-linear rotation u_(2i) -> u_(2i+1), u_(2i+1) -> -u_(2i) on F-coordinates.

    It preserves the Darboux Theta~ and commutes with eta^(F).
    """
    h = rm.h
    M = la.zeros(h)
    for i in range(rm.d // 2):
        for k in range(rm.m):
            a, b = rm.gen(2 * i, k), rm.gen(2 * i + 1, k)
            M[b][a] = mpq(1)
            M[a][b] = mpq(-1)
    return M


def _sign_operator(ctx: WeilContext, signs) -> la.Matrix:
    """The operator acting on V_sigma-hat,R by signs[i] (i follows real_embeddings)."""
    n = ctx.rank
    if len(set(signs)) == 1:
        return la.scale(la.identity(n), signs[0])
    # s (P_+ - P_-) = s eta(sqrt t) / sqrt t
    k = simplify(signs[0] * ctx.spec.sqrt_t.inv())
    return la.scale(ctx.eta_sqrt_t, k)


def _orientations(spec: TowerSpec) -> list[tuple]:
    return [s for s in product((1, -1), repeat=spec.half_e)]


def oriented_structure(ctx: WeilContext, signs) -> ComplexStructure:
    """sum over sigma-hat of signs(sigma-hat) times the standard rotation on V_sigma-hat."""
    IX = _standard_rotation(ctx.rm)
    base = la.direct_sum(IX, la.scale(la.transpose(IX), -1))
    label = "".join("+" if s > 0 else "-" for s in signs)
    return ComplexStructure(la.matmul(_sign_operator(ctx, signs), base), None, f"fixture[{label}]")


def builtin_fixture(spec: TowerSpec, d: int = 4):
    """(RMData, ComplexStructure) on the F-Darboux model with a polarizing t attached."""
    rm = darboux_rm(spec, d)
    ctx = build_context(spec, rm)
    for signs in _orientations(spec):
        I = oriented_structure(ctx, signs)
        try:
            I.t = polarizing_t_search(ctx, I)
        except SearchExhausted:
            continue
        return rm, I
    raise FixtureSearchFailed("no orientation pattern admits a polarizing t")


# ---------------------------------------------------------------------------
# eta-compatibility and the Weil condition
# ---------------------------------------------------------------------------
def commutes_with_eta(ctx: WeilContext, I) -> bool:
    M = _as_matrix(I)
    gens = [ctx.eta_sqrt_mq] + ([ctx.eta_sqrt_t] if ctx.spec.t else [])
    return all(la.equal(la.matmul(M, A), la.matmul(A, M)) for A in gens)


def formal_i(spec: TowerSpec):
    """i = sqrt(-q) / sqrt(q) when sqrt(q) lies in the tower, else None."""
    if is_rational_square(spec.q):
        return simplify(spec.sqrt_mq * (mpq(1) / rational_sqrt(spec.q)))
    if spec.t and is_rational_square(spec.q / spec.t):
        # sqrt q = r sqrt t, so i = sqrt(-tq) / (r t)
        r = rational_sqrt(spec.q / spec.t)
        return simplify(spec.sqrt_mtq * (mpq(1) / (r * spec.t)))
    return None


def restricted_trace(M: la.Matrix, basis: list[list]):
    """Trace of M on the M-stable span of ``basis``."""
    space = Subspace(len(M), [dict(enumerate(v)) for v in basis])
    total = mpq(0)
    for idx, row in enumerate(space.rows):
        vec = [row.get(i, mpq(0)) for i in range(len(M))]
        total = simplify(total + space.coordinates(la.matvec(M, vec))[idx])
    return total


def weil_condition(ctx: WeilContext, I) -> dict:
    """dim V_sigma^{1,0} for each complex embedding sigma.

    V_sigma is I-stable, and tr(I | V_sigma) = i (p - q) with p + q = d, so the
    dimensions follow from one exact trace. The formal i is only needed when
    that trace is non-zero.
    """
    if not commutes_with_eta(ctx, I):
        raise EtaIncompatible("I does not commute with eta(K)")
    M = _as_matrix(I)
    unit = None
    out = {}
    for sigma, basis in ctx.V_sigma.items():
        tr = restricted_trace(M, basis)
        if not tr:
            out[sigma] = ctx.d // 2
            continue
        if unit is None:
            unit = formal_i(ctx.spec)
            if unit is None:
                raise ArithmeticError("non-zero trace on V_sigma without i in the tower")
        diff = simplify(tr * unit.inv())  # p - q
        if isinstance(diff, TowerElt) or diff.denominator != 1:
            raise ArithmeticError(f"tr(I|V_sigma)/i is not an integer: {diff}")
        out[sigma] = (ctx.d + int(diff)) // 2
    return out


def weil_balanced(dims: dict, d: int) -> bool:
    return all(v == d // 2 for v in dims.values())


# ---------------------------------------------------------------------------
# the domain Omega_{B,t}
# ---------------------------------------------------------------------------
def g_matrix(ctx: WeilContext, I, t) -> la.Matrix:
    """Gram matrix of g_I(x, y) = (eta(t) x, I y)_V."""
    return la.matmul(la.transpose(ctx.eta_matrix(t)), la.matmul(ctx.gram, _as_matrix(I)))


def positive_definite(g: la.Matrix) -> bool | None:
    """Exact Sylvester test at the real embedding sqrt(t) > 0.

    Returns None when some pivot is not real (entries outside F).
    """
    if not la.equal(g, la.transpose(g)):
        return False
    piv = la.symmetric_pivots(g)
    if piv is None:
        return False
    for p in piv:
        if isinstance(p, TowerElt) and not p.in_F():
            return None
        if sign_at_embedding(p, 1) <= 0:
            return False
    return True


@dataclass
class OmegaVerdict:
    member: bool
    failing_clause: str | None = None
    weil_dims: dict = field(default_factory=dict)
    pivots_positive: bool | None = None

    def to_json(self) -> dict:
        out = {"member": self.member, "weil_dims": {sigma_label(s): v for s, v in sorted(self.weil_dims.items())}}
        if self.failing_clause:
            out["failing_clause"] = self.failing_clause
        return out


def _w_stable(ctx: WeilContext, M: la.Matrix) -> bool:
    for T in cm_types(ctx):
        basis = ctx.W_T(T)
        space = Subspace(ctx.rank, [dict(enumerate(v)) for v in basis])
        if not all(space.member(la.matvec(M, v)) for v in basis):
            return False
    return True


def omega_membership(ctx: WeilContext, I, t) -> OmegaVerdict:
    """Check the defining conditions of Omega_{B,t}; the verdict names the first failure."""
    if not isinstance(t, TowerElt):
        t = TowerElt(ctx.spec, t)
    if t.is_zero() or not t.in_K_minus():
        return OmegaVerdict(False, "t must be a non-zero element of K_-")
    cs = I if isinstance(I, ComplexStructure) else ComplexStructure(I)
    if not cs.square_is_minus_one():
        return OmegaVerdict(False, "I^2 != -1")
    if not commutes_with_eta(ctx, cs):
        return OmegaVerdict(False, "I does not commute with eta(K)")
    if not _w_stable(ctx, cs.matrix):
        return OmegaVerdict(False, "some W_T is not I-stable")
    dims = weil_condition(ctx, cs)
    if not weil_balanced(dims, ctx.d):
        return OmegaVerdict(False, "Weil condition fails", dims)
    pos = positive_definite(g_matrix(ctx, cs, t))
    if pos is None:
        return OmegaVerdict(False, "g_I is not real", dims, None)
    if not pos:
        return OmegaVerdict(False, "g_I is not positive definite", dims, False)
    return OmegaVerdict(True, None, dims, True)


def t_candidates(spec: TowerSpec) -> list:
    """c1 sqrt(-q) + c2 sqrt(-tq) with |c| <= 2, smallest coefficients first."""
    rng = (0, 1, -1, 2, -2)
    if not spec.t:
        return [spec.elt(0, 0, c) for c in rng if c]
    pairs = [(c1, c2) for c1 in rng for c2 in rng if c1 or c2]
    pairs.sort(key=lambda p: (max(abs(p[0]), abs(p[1])), abs(p[0]) + abs(p[1])))
    return [spec.elt(0, 0, c1, c2) for c1, c2 in pairs]


def polarizing_t_search(ctx: WeilContext, I) -> TowerElt:
    """First t among the small candidates with g_I positive definite."""
    if commutes_with_eta(ctx, I):
        for t in t_candidates(ctx.spec):
            if positive_definite(g_matrix(ctx, I, t)):
                return t
    raise SearchExhausted("no candidate t polarizes I")


def cm_type_of(spec: TowerSpec, t: TowerElt) -> CMType:
    """T(sigma-hat) is the embedding over sigma-hat sending t to the upper half plane."""
    # t = sqrt(-q) (c1 + c2 sqrt t)
    u = TowerElt(spec, t.c, t.d) if spec.t else TowerElt(spec, t.c)
    return CMType(tuple(sign_at_embedding(u, st) for st in real_embeddings(spec)))


def _sign_unit(spec: TowerSpec, signs) -> TowerElt:
    """An element of F whose sign at sigma-hat_i is signs[i]."""
    if len(set(signs)) == 1:
        return TowerElt(spec, signs[0])
    return TowerElt(spec, 0, signs[0])


def delta_transfer(ctx: WeilContext, I: ComplexStructure, T1: CMType, T2: CMType) -> ComplexStructure:
    """delta_{T1,T2} o I, polarized by t' = t u with u of sign T1 T2 at each sigma-hat."""
    t = I.t if I.t is not None else polarizing_t_search(ctx, I)
    if cm_type_of(ctx.spec, t) != T1 or not omega_membership(ctx, I, t).member:
        raise NotAMember(f"I is not in Omega for type {T1.label()}")
    signs = tuple(a * b for a, b in zip(T1.signs, T2.signs))
    delta = _sign_operator(ctx, signs)
    t2 = simplify(t * _sign_unit(ctx.spec, signs))
    out = ComplexStructure(la.matmul(delta, I.matrix), t2, f"delta[{T2.label()}]({I.label})")
    verdict = omega_membership(ctx, out, t2)
    if not verdict.member:
        raise NotAMember(f"transferred structure fails: {verdict.failing_clause}")
    return out


# ---------------------------------------------------------------------------
# rational unipotent isometries commuting with eta
# ---------------------------------------------------------------------------
def unipotent_isometry(ctx: WeilContext, t, w: list, lam=None) -> la.Matrix:
    """1 + N with N(x) = eta(lam H_t(w, x)) w, for H_t-isotropic w and lam in K_-.

    N is K-linear, skew for (.,.)_V and squares to zero, so 1 + N is an
    isometry commuting with eta(K) of determinant one on every V_sigma.
    """
    if lam is None:
        lam = ctx.spec.sqrt_mq
    if ctx.hermitian_Ht(t, w, w):
        raise ValueError("w must be H_t-isotropic")
    n = ctx.rank
    cols = []
    for j in range(n):
        ej = [mpq(0)] * n
        ej[j] = mpq(1)
        k = simplify(lam * ctx.hermitian_Ht(t, w, ej))
        if not isinstance(k, TowerElt):
            k = TowerElt(ctx.spec, k)
        cols.append(la.matvec(ctx.eta_matrix(k), w) if not k.is_zero() else [mpq(0)] * n)
    N = la.transpose(cols)
    return la.add(la.identity(n), N)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------
def hodge_report(ctx: WeilContext, I: ComplexStructure | None = None) -> dict:
    if I is None:
        _, I = builtin_fixture(ctx.spec, ctx.d)
    sb = secant_basis(ctx)
    hodge_b = [hodge_type_test(I, v) for v in sb.vectors]
    t = I.t
    if t is None:
        try:
            t = polarizing_t_search(ctx, I)
        except SearchExhausted:
            t = None
    out = {"hodgeB": hodge_b, "t_found": t.to_json() if t is not None else None}
    try:
        dims = weil_condition(ctx, I)
        out["weil_dims"] = {sigma_label(s): v for s, v in sorted(dims.items())}
    except EtaIncompatible:
        out["weil_dims"] = None
    if t is not None:
        out["omega"] = omega_membership(ctx, I, t).to_json()
    else:
        out["omega"] = {"member": False, "failing_clause": "no polarizing t found"}
    return out
