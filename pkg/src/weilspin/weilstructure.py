"""The Weil-type structure on V = H^1(X x X^) built from real multiplication.

Model. H^1(X) = F^d with Q-basis a_(j,0), a_(j,1) (j = 0..d-1), where
sqrt(t) acts on each pair by the companion matrix [[0, t], [1, 0]]
(for t = 0 there is one generator per F-coordinate). The 2-form Theta is
the trace of an F-valued alternating form Theta~ on the F-coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Sequence

from gmpy2 import mpq

from . import linalg as la
from .errors import DegenerateW, NoCertificateFound, NotFCompatible, NotInInvariantSum, NotPurelyImaginary
from .exterior import Multivector, Subspace, substitute, wedge_all
from .fieldtower import (
    ONE,
    ZERO,
    TowerElt,
    TowerSpec,
    cm_embeddings,
    galois_group,
    real_embeddings,
    simplify,
)
from .spinclifford import QuadSpace, contraction_matrix, list_to_dict


# ---------------------------------------------------------------------------
# rational restriction
# ---------------------------------------------------------------------------

def tower_basis(spec: TowerSpec) -> list:
    if spec.t == 0:
        return [ONE, spec.sqrt_mq]
    return [ONE, spec.sqrt_t, spec.sqrt_mq, spec.sqrt_mtq]


def galois_trace_vector(spec: TowerSpec, v: dict) -> dict:
    out: dict = {}
    for g in galois_group(spec):
        for k, c in v.items():
            if isinstance(c, TowerElt):
                c = c.galois(g.s_t, g.s_q) if spec.t > 0 else c.galois(1, g.s_q)
            val = out.get(k)
            out[k] = c if val is None else val + c
    res = {}
    for k, c in out.items():
        c = simplify(c)
        if c:
            if isinstance(c, TowerElt):
                raise ValueError("trace did not land in Q")
            res[k] = c
    return res


def rational_restriction(spec: TowerSpec, vectors: Sequence[dict], ambient: int | None = None) -> Subspace:
    """Q-points of a Galois-stable K~-span, as a rational echelon subspace.

    The Q-points are spanned by the Galois traces Tr(lambda v) for lambda in a
    Q-basis of K~ and v in a spanning set.
    """
    out = Subspace(ambient)
    for v in vectors:
        for lam in tower_basis(spec):
            w = {k: simplify(c * lam) for k, c in v.items()}
            tr = galois_trace_vector(spec, w)
            if tr:
                out.add(tr)
    return out


# ---------------------------------------------------------------------------
# real multiplication data
# ---------------------------------------------------------------------------

@dataclass
class RMData:
    """Real multiplication by F on H^1(X) together with an F-compatible Theta."""

    spec: TowerSpec
    d: int
    theta_tilde: list  # d x d alternating matrix of F-elements (TowerElt)

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ValueError(f"d must be a positive even integer, got {self.d}")
        for i in range(self.d):
            if self.theta_tilde[i][i]:
                raise ValueError("Theta~ must be alternating")
            for j in range(self.d):
                if self.theta_tilde[i][j] + self.theta_tilde[j][i]:
                    raise ValueError("Theta~ must be alternating")
                if isinstance(self.theta_tilde[i][j], TowerElt) and not self.theta_tilde[i][j].in_F():
                    raise ValueError("Theta~ must be F-valued")

    @property
    def m(self) -> int:
        """Generators per F-coordinate."""
        return 2 if self.spec.t > 0 else 1

    @property
    def h(self) -> int:
        """Rank of H^1(X) over Q, which is 2n."""
        return self.d * self.m

    @property
    def n(self) -> int:
        return self.h // 2

    def gen(self, j: int, k: int = 0) -> int:
        """Index of a_(j,k)."""
        return self.m * j + k

    @cached_property
    def eta_hat_sqrt_t(self) -> la.Matrix:
        """eta^(sqrt t) on H^1(X) (zero matrix placeholder when t = 0)."""
        M = la.zeros(self.h)
        if self.spec.t == 0:
            return M
        for j in range(self.d):
            i0, i1 = self.gen(j, 0), self.gen(j, 1)
            M[i1][i0] = ONE
            M[i0][i1] = mpq(self.spec.t)
        return M

    def eta_hat(self, f) -> la.Matrix:
        """eta^(f) for f = a + b sqrt(t) in F."""
        if isinstance(f, TowerElt):
            if not f.in_F():
                raise ValueError("eta^ needs an element of F")
            a, b = f.a, f.b
        else:
            a, b = mpq(f), ZERO
        out = la.scale(la.identity(self.h), a)
        if b:
            out = la.add(out, la.scale(self.eta_hat_sqrt_t, b))
        return out

    @cached_property
    def theta(self) -> Multivector:
        """Theta = tr_{F/Q} o Theta~ as a rational 2-form on H^1(X)."""
        t = self.spec.t
        out = Multivector.zero(self.h)
        for i in range(self.d):
            for j in range(i + 1, self.d):
                f = self.theta_tilde[i][j]
                if not f:
                    continue
                if isinstance(f, TowerElt):
                    x, y = f.a, f.b
                else:
                    x, y = mpq(f), ZERO
                if self.m == 1:
                    out = out + Multivector.monomial(self.h, [i, j], x)
                    continue
                a0, a1 = self.gen(i, 0), self.gen(i, 1)
                b0, b1 = self.gen(j, 0), self.gen(j, 1)
                if x:
                    out = out + Multivector.monomial(self.h, [a0, b1], x) + Multivector.monomial(self.h, [a1, b0], x)
                if y:
                    out = out + Multivector.monomial(self.h, [a0, b0], t * y) + Multivector.monomial(self.h, [a1, b1], y)
        return out

    @cached_property
    def contraction(self) -> la.Matrix:
        return contraction_matrix(self.theta, self.h)

    def check(self) -> None:
        M = self.eta_hat_sqrt_t
        if self.spec.t:
            if not la.equal(la.matmul(M, M), la.scale(la.identity(self.h), self.spec.t)):
                raise ValueError("eta^(sqrt t)^2 != t")
            C = self.contraction
            if not la.equal(la.matmul(M, C), la.matmul(C, la.transpose(M))):
                raise NotFCompatible("Theta is not F-compatible")
        if not la.det(self.contraction):
            raise ValueError("Theta is degenerate")

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "theta_tilde": [[(x.to_json()[:2] if isinstance(x, TowerElt) else [str(x), "0"]) for x in row] for row in self.theta_tilde],
        }


def darboux_theta_tilde(spec: TowerSpec, d: int) -> list:
    """Standard F-Darboux form: Theta~(u_(2i), u_(2i+1)) = 1."""
    mat = [[TowerElt(spec, 0) for _ in range(d)] for _ in range(d)]
    for i in range(0, d, 2):
        mat[i][i + 1] = TowerElt(spec, 1)
        mat[i + 1][i] = TowerElt(spec, -1)
    return mat


def darboux_rm(spec: TowerSpec, d: int) -> RMData:
    rm = RMData(spec, d, darboux_theta_tilde(spec, d))
    rm.check()
    return rm


# ---------------------------------------------------------------------------
# the context
# ---------------------------------------------------------------------------

class WeilContext:
    """Everything derived from (t, q, d, Theta~): W, eta, V_sigma, Xi, HW, ..."""

    def __init__(self, spec: TowerSpec, rm: RMData):
        self.spec = spec
        self.rm = rm
        self.qs = QuadSpace(rm.n)
        self.n = rm.n
        self.d = rm.d
        self.e = spec.e
        self.h = rm.h
        self.rank = self.qs.rank
        self._memo: dict = {}

    def memo(self, key, build):
        """Cache derived data owned by other modules (secant, orlov, hodge)."""
        if key not in self._memo:
            self._memo[key] = build()
        return self._memo[key]

    # -- basic matrices -----------------------------------------------------
    @cached_property
    def eta_sqrt_t(self) -> la.Matrix:
        M = self.rm.eta_hat_sqrt_t
        return la.direct_sum(M, la.transpose(M))

    @cached_property
    def eta_sqrt_mq(self) -> la.Matrix:
        """eta(sqrt -q): (0, xi) -> (q xi _| Theta, 0) and (xi _| Theta, 0) -> (0, -xi)."""
        C = self.rm.contraction
        Cinv = la.inverse(C)
        h = self.h
        return la.block([[la.zeros(h), la.scale(C, self.spec.q)], [la.scale(Cinv, -1), la.zeros(h)]])

    def eta_matrix(self, s) -> la.Matrix:
        """Rational matrix of eta(s) for s in K."""
        if not isinstance(s, TowerElt):
            s = TowerElt(self.spec, s)
        n = self.rank
        out = la.scale(la.identity(n), s.a)
        if s.c:
            out = la.add(out, la.scale(self.eta_sqrt_mq, s.c))
        if self.spec.t:
            if s.b:
                out = la.add(out, la.scale(self.eta_sqrt_t, s.b))
            if s.d:
                out = la.add(out, la.scale(la.matmul(self.eta_sqrt_t, self.eta_sqrt_mq), s.d))
        return out

    def eta_hat_V(self, f) -> la.Matrix:
        M = self.rm.eta_hat(f)
        return la.direct_sum(M, la.transpose(M))

    @cached_property
    def gram(self) -> la.Matrix:
        return self.qs.gram()

    def adjoint(self, A: la.Matrix) -> la.Matrix:
        """Adjoint under (.,.)_V: G^{-1} A^T G (G is its own inverse)."""
        G = self.gram
        return la.matmul(G, la.matmul(la.transpose(A), G))

    # -- W and eigenspaces ----------------------------------------------------
    @cached_property
    def W(self) -> list[list]:
        """Basis of W = {(-sqrt(-q) xi _| Theta, xi)} over K~."""
        h = self.h
        C = self.rm.contraction
        r = self.spec.sqrt_mq
        out = []
        for j in range(h):
            v = [ZERO] * self.rank
            for i in range(h):
                if C[i][j]:
                    v[i] = simplify(-r * C[i][j])
            v[h + j] = ONE
            out.append(v)
        return out

    def check_W(self) -> None:
        Wbar = [[simplify(x.iota()) if isinstance(x, TowerElt) else x for x in v] for v in self.W]
        tot = Subspace(self.rank, [list_to_dict(v) for v in self.W + Wbar])
        if tot.dim != self.rank:
            raise DegenerateW("W meets its conjugate")

    @cached_property
    def sigmas(self) -> list[tuple[int, int]]:
        return cm_embeddings(self.spec)

    @cached_property
    def V_sigma(self) -> dict:
        """Simultaneous eigenspaces of eta(sqrt t), eta(sqrt -q) over K~."""
        out = {}
        n = self.rank
        for (st, sq) in self.sigmas:
            rows = []
            A = la.sub(self.eta_sqrt_mq, la.scale(la.identity(n), sq * self.spec.sqrt_mq))
            rows.extend(A)
            if self.spec.t:
                B = la.sub(self.eta_sqrt_t, la.scale(la.identity(n), st * self.spec.sqrt_t))
                rows.extend(B)
            basis = la.nullspace(rows)
            out[(st, sq)] = basis
        return out

    @cached_property
    def V_hat(self) -> dict:
        """V_sigma-hat = eigenspaces of eta(sqrt t) (all of V when t = 0)."""
        out = {}
        for st in real_embeddings(self.spec):
            if self.spec.t:
                A = la.sub(self.eta_sqrt_t, la.scale(la.identity(self.rank), st * self.spec.sqrt_t))
                out[st] = la.nullspace(A)
            else:
                out[st] = [self.qs.basis_vector(i) for i in range(self.rank)]
        return out

    def W_T(self, T) -> list[list]:
        """Basis of W_T = sum over sigma-hat of V_(sigma-hat, T(sigma-hat))."""
        out = []
        for st, sq in zip(real_embeddings(self.spec), T.signs):
            out.extend(self.V_sigma[(st, sq)])
        return out

    # -- Theta components ------------------------------------------------------
    @cached_property
    def theta_hat(self) -> dict:
        """Theta_sigma-hat = wedge^2 of the eta^(sqrt t)-eigenprojection applied to Theta."""
        if not self.spec.t:
            return {1: self.rm.theta}
        h = self.h
        M = self.rm.eta_hat_sqrt_t
        out = {}
        for st in (1, -1):
            # P = (1 + st M / sqrt t) / 2, columns give images of a_k
            k = st * self.spec.sqrt_t.inv() * mpq(1, 2)
            images = []
            for col in range(h):
                v = {}
                v[col] = mpq(1, 2)
                for row in range(h):
                    if M[row][col]:
                        val = simplify(M[row][col] * k + v.get(row, ZERO))
                        v[row] = val
                images.append(Multivector.vector(h, v))
            out[st] = substitute(images, self.rm.theta)
        return out

    # -- Xi forms ---------------------------------------------------------------
    def k_minus_basis(self) -> list:
        if self.spec.t:
            return [self.spec.sqrt_mq, self.spec.sqrt_mtq]
        return [self.spec.sqrt_mq]

    def xi_matrix(self, s) -> la.Matrix:
        if not isinstance(s, TowerElt):
            s = TowerElt(self.spec, s)
        if not s.in_K_minus():
            raise NotPurelyImaginary(f"{s} is not in K_-")
        return la.matmul(la.transpose(self.eta_matrix(s)), self.gram)

    def form_avatar(self, B: la.Matrix) -> Multivector:
        """Alternating bilinear form on V as an element of wedge^2 V (a <-> b swap)."""
        n = self.rank
        sw = self.swap_index
        out: dict = {}
        for i in range(n):
            for j in range(i + 1, n):
                c = B[i][j]
                if c:
                    mv = Multivector.monomial(n, [sw(i), sw(j)], c)
                    for m, v in mv.terms.items():
                        out[m] = out.get(m, ZERO) + v
        return Multivector(n, out)

    def swap_index(self, i: int) -> int:
        h = self.h
        return i + h if i < h else i - h

    def xi_form(self, s) -> tuple[la.Matrix, Multivector]:
        B = self.xi_matrix(s)
        return B, self.form_avatar(B)

    @cached_property
    def A2(self) -> list[Multivector]:
        return [self.xi_form(s)[1] for s in self.k_minus_basis()]

    # -- Hermitian form ---------------------------------------------------------
    def pairing_F(self, x: Sequence, y: Sequence):
        """(x, y)_{V_eta^}: the F-valued form whose trace is (x, y)_V."""
        p = self.qs.pairing(x, y)
        if not self.spec.t:
            return TowerElt(self.spec, p)
        q2 = self.qs.pairing(la.matvec(self.eta_sqrt_t, x), y)
        return TowerElt(self.spec, p * mpq(1, 2), q2 / (2 * self.spec.t))

    def hermitian_Ht(self, t, x: Sequence, y: Sequence) -> TowerElt:
        if not isinstance(t, TowerElt) or t.is_zero() or not t.in_K_minus():
            raise NotPurelyImaginary("H_t needs a non-zero t in K_-")
        etx = la.matvec(self.eta_matrix(t), x)
        return simplify(-(t * t) * self.pairing_F(x, y) + t * self.pairing_F(etx, y))

    # -- HW and the invariant algebra -------------------------------------------
    @cached_property
    def hw_lines(self) -> dict:
        """For each sigma the line wedge^d V_sigma (a K~-multivector)."""
        out = {}
        for sigma, basis in self.V_sigma.items():
            vecs = [Multivector.vector(self.rank, v) for v in basis]
            out[sigma] = wedge_all(vecs, self.rank)
        return out

    @cached_property
    def HW(self) -> Subspace:
        return rational_restriction(self.spec, [dict(x.terms) for x in self.hw_lines.values()])

    @cached_property
    def HW_basis(self) -> list[Multivector]:
        return [Multivector(self.rank, r) for r in self.HW.rows]

    @cached_property
    def sym_basis(self) -> list[Multivector]:
        """Spanning set of Im(Sym^{d/2} A^2)."""
        from itertools import combinations_with_replacement

        out = []
        for combo in combinations_with_replacement(range(len(self.A2)), self.d // 2):
            out.append(wedge_all([self.A2[i] for i in combo], self.rank))
        return out

    @cached_property
    def SymPart(self) -> Subspace:
        return Subspace(None, [dict(x.terms) for x in self.sym_basis])

    @cached_property
    def _decomposer(self) -> tuple[Subspace, list]:
        sp = Subspace(None, track=True)
        syms = [Multivector(self.rank, r) for r in self.SymPart.rows]
        for x in syms:
            sp.add(dict(x.terms))
        for x in self.HW_basis:
            sp.add(dict(x.terms))
        return sp, syms

    def decompose_Ad(self, x: Multivector) -> tuple[Multivector, Multivector]:
        sp, syms = self._decomposer
        sol = sp.solve(dict(x.terms))
        if sol is None:
            raise NotInInvariantSum("class is not in Im(Sym^{d/2} A^2) + HW")
        sym = Multivector.zero(self.rank)
        hw = Multivector.zero(self.rank)
        ns = len(syms)
        for idx, c in sol.items():
            if idx < ns:
                sym = sym + syms[idx].scale(c)
            else:
                hw = hw + self.HW_basis[idx - ns].scale(c)
        return sym, hw

    def hw_and_invariants(self) -> dict:
        return {"HW": self.HW, "A2": Subspace(None, [dict(x.terms) for x in self.A2]), "SymPart": self.SymPart}

    # -- split certificate --------------------------------------------------------
    def theta_dual_form(self, xi: Sequence, zeta: Sequence):
        """Theta evaluated on two covectors (elements of H^1(X^))."""
        C = self.rm.contraction
        return la.dot(zeta, la.matvec(C, xi))

    def split_certificate(self, t) -> list[list]:
        """K-basis vectors (0, y_i) spanning a d/2-dimensional H_t-isotropic subspace."""
        rm = self.rm
        h = self.h
        half = self.d // 2
        for coords in combinations(range(self.d), half):
            qbasis = []
            for j in coords:
                for k in range(rm.m):
                    y = [ZERO] * h
                    y[rm.gen(j, k)] = ONE
                    qbasis.append(y)
            if all(not self.theta_dual_form(a, b) for a in qbasis for b in qbasis):
                vecs = []
                for j in coords:
                    v = [ZERO] * self.rank
                    v[h + rm.gen(j, 0)] = ONE
                    vecs.append(v)
                if all(not self.hermitian_Ht(t, a, b) for a in vecs for b in vecs):
                    return vecs
        raise NoCertificateFound("no coordinate F-subspace is isotropic")

    # -- summary ------------------------------------------------------------------
    def summary(self) -> dict:
        return {
            "e": self.e,
            "d": self.d,
            "n": self.n,
            "dimHW": self.HW.dim,
            "dimA2": Subspace(None, [dict(x.terms) for x in self.A2]).dim,
            "dimSym": self.SymPart.dim,
        }


def build_context(spec: TowerSpec, rm: RMData | None = None, d: int = 4) -> WeilContext:
    if rm is None:
        rm = darboux_rm(spec, d)
    rm.check()
    ctx = WeilContext(spec, rm)
    ctx.check_W()
    return ctx


def eta_matrix(ctx: WeilContext, s) -> la.Matrix:
    return ctx.eta_matrix(s)


def xi_form(ctx: WeilContext, s):
    return ctx.xi_form(s)


def hermitian_Ht(ctx: WeilContext, t, x, y):
    return ctx.hermitian_Ht(t, x, y)


def hw_and_invariants(ctx: WeilContext) -> dict:
    return ctx.hw_and_invariants()


def decompose_Ad(ctx: WeilContext, x: Multivector):
    return ctx.decompose_Ad(x)


def split_certificate(ctx: WeilContext, t):
    return ctx.split_certificate(t)
