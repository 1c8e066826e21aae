"""The secant space B spanned by the pure spinors ell_T, the grading of B (x) B,
the KB_1 kernel, the B_i split and the Theta-family membership tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from gmpy2 import mpq

from . import linalg as la
from .errors import NotInBB1, NotInFamily
from .exterior import Multivector, Subspace, contract, exp_truncated, kernel, power, substitute, wedge
from .fieldtower import (
    ONE,
    ZERO,
    CMType,
    TowerElt,
    coeff_inv,
    coeff_to_json,
    enumerate_cm_types,
    nm_F_Q,
    overlap,
    real_embeddings,
    simplify,
)
from .weilstructure import WeilContext, rational_restriction


def sigma_label(sigma: tuple[int, int]) -> str:
    return "(" + ",".join("+" if s > 0 else "-" for s in sigma) + ")"


# ---------------------------------------------------------------------------
# the pure spinors ell_T
# ---------------------------------------------------------------------------

def cm_types(ctx: WeilContext) -> list[CMType]:
    return enumerate_cm_types(ctx.spec)


def ell_T(ctx: WeilContext, T: CMType) -> Multivector:
    """exp(sqrt(-q) sum_sigma-hat T(sigma-hat) Theta_sigma-hat)."""
    def build():
        form = Multivector.zero(ctx.h)
        for st, s in zip(real_embeddings(ctx.spec), T.signs):
            form = form + ctx.theta_hat[st].scale(s)
        return exp_truncated(form.scale(ctx.spec.sqrt_mq))
    return ctx.memo(("ell", T.signs), build)


def ell_all(ctx: WeilContext) -> dict:
    return {T: ell_T(ctx, T) for T in cm_types(ctx)}


def theta_minus(ctx: WeilContext) -> Multivector:
    """Theta_sigma1 - Theta_sigma2 (irrational; sqrt(t) times it is rational)."""
    if not ctx.spec.t:
        raise ValueError("needs a biquadratic tower")
    return ctx.theta_hat[1] - ctx.theta_hat[-1]


# ---------------------------------------------------------------------------
# named basis
# ---------------------------------------------------------------------------

@dataclass
class SecantBasis:
    """Rational basis of B with the change of basis to the ell_T.

    ``M[k][i]`` expresses ell_{types[k]} = sum_i M[k][i] * vectors[i];
    ``N`` is the inverse, vectors[i] = sum_k N[i][k] * ell_{types[k]}.
    """

    names: list
    vectors: list
    types: list
    M: list
    N: list
    space: Subspace

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def coords(self, x: Multivector) -> list:
        """Coordinates of x in the named basis."""
        sol = self._solver().solve(x.terms)
        if sol is None:
            raise ValueError("class is not in B")
        return [sol.get(i, ZERO) for i in range(self.dim)]

    def _solver(self) -> Subspace:
        if not hasattr(self, "_solve_space"):
            self._solve_space = Subspace(None, [v.terms for v in self.vectors], track=True)
        return self._solve_space

    def combine(self, coeffs) -> Multivector:
        out = Multivector.zero(self.vectors[0].rank)
        for c, v in zip(coeffs, self.vectors):
            if c:
                out = out + v.scale(c)
        return out

    def ell_coords(self, coeffs) -> list:
        """Coordinates over the ell_T of sum_i coeffs[i] * vectors[i]."""
        m = self.dim
        return [simplify(sum((coeffs[i] * self.N[i][k] for i in range(m) if coeffs[i]), ZERO)) for k in range(m)]

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "vectors": [v.to_json() for v in self.vectors],
            "types": [T.label() for T in self.types],
        }


def secant_basis(ctx: WeilContext) -> SecantBasis:
    return ctx.memo("secant_basis", lambda: _build_secant_basis(ctx))


def _build_secant_basis(ctx: WeilContext) -> SecantBasis:
    spec = ctx.spec
    types = cm_types(ctx)
    ell = ell_all(ctx)
    half = mpq(1, 2)
    inv2r = coeff_inv(spec.sqrt_mq * 2)
    up = CMType((1,) * spec.half_e)
    lo = up.conjugate()
    alpha = (ell[up] + ell[lo]).scale(half)
    beta = (ell[up] - ell[lo]).scale(inv2r)
    names = ["alpha", "beta"]
    vectors = [alpha, beta]
    if spec.t:
        pm, mp = CMType((1, -1)), CMType((-1, 1))
        alpha_t = (ell[pm] + ell[mp]).scale(half)
        sqrt_t_beta_t = (ell[pm] - ell[mp]).scale(simplify(spec.sqrt_t * inv2r))
        names += ["alpha~", "sqrt(t)beta~"]
        vectors += [alpha_t, sqrt_t_beta_t]
    for v in vectors:
        if not v.is_rational():
            raise AssertionError("named secant vector is not rational")
    solver = Subspace(None, [v.terms for v in vectors], track=True)
    M = []
    for T in types:
        sol = solver.solve(ell[T].terms)
        if sol is None:
            raise AssertionError("ell_T outside the named span")
        M.append([sol.get(i, ZERO) for i in range(len(vectors))])
    N = la.inverse(M)
    space = rational_restriction(spec, [ell[T].terms for T in types])
    return SecantBasis(names, vectors, types, M, N, space)


# ---------------------------------------------------------------------------
# B (x) B and its grading
# ---------------------------------------------------------------------------

@dataclass
class BBClass:
    """sum_{i,j} coeffs[i][j] b_i (x) b_j in the named basis of B."""

    coeffs: list

    @classmethod
    def from_pair(cls, sb: SecantBasis, x: Multivector, y: Multivector) -> "BBClass":
        cx, cy = sb.coords(x), sb.coords(y)
        return cls([[simplify(a * b) for b in cy] for a in cx])

    @classmethod
    def from_flat(cls, vec: dict, m: int) -> "BBClass":
        return cls([[vec.get(i * m + j, ZERO) for j in range(m)] for i in range(m)])

    def flat(self) -> dict:
        m = len(self.coeffs)
        return {i * m + j: c for i in range(m) for j in range(m) for c in [self.coeffs[i][j]] if c}

    def is_zero(self) -> bool:
        return la.is_zero(self.coeffs)

    def is_rational(self) -> bool:
        return la.is_rational(self.coeffs)

    def __add__(self, other: "BBClass") -> "BBClass":
        return BBClass(la.add(self.coeffs, other.coeffs))

    def __eq__(self, other):
        return isinstance(other, BBClass) and la.equal(self.coeffs, other.coeffs)

    def to_json(self) -> list:
        return [[coeff_to_json(c) for c in row] for row in self.coeffs]


def ell_pair_matrix(sb: SecantBasis, c: BBClass) -> list:
    """L with c = sum L[k][l] ell_{T_k} (x) ell_{T_l}, i.e. L = N^T C N."""
    return la.matmul(la.transpose(sb.N), la.matmul(c.coeffs, sb.N))


def from_ell_pair_matrix(sb: SecantBasis, L: list) -> BBClass:
    return BBClass(la.matmul(la.transpose(sb.M), la.matmul(L, sb.M)))


def bb_decompose(ctx: WeilContext, c: BBClass) -> list:
    """Components c_k in BB_k, k = 0..e/2, bucketed by |T cap T'|."""
    sb = secant_basis(ctx)
    L = ell_pair_matrix(sb, c)
    m = sb.dim
    out = []
    for k in range(ctx.spec.half_e + 1):
        Lk = [[L[a][b] if overlap(sb.types[a], sb.types[b]) == k else ZERO for b in range(m)] for a in range(m)]
        out.append(from_ell_pair_matrix(sb, Lk))
    return out


def bb_subspace(ctx: WeilContext, k: int) -> Subspace:
    """Rational points of BB_k in flattened named coordinates."""
    def build():
        sb = secant_basis(ctx)
        m = sb.dim
        vecs = []
        for a, b in product(range(m), repeat=2):
            if overlap(sb.types[a], sb.types[b]) == k:
                vecs.append({i * m + j: simplify(sb.M[a][i] * sb.M[b][j])
                             for i in range(m) for j in range(m) if sb.M[a][i] and sb.M[b][j]})
        return rational_restriction(ctx.spec, vecs)
    return ctx.memo(("BB", k), build)


def bb_dims(ctx: WeilContext) -> list[int]:
    return [bb_subspace(ctx, k).dim for k in range(ctx.spec.half_e + 1)]


# ---------------------------------------------------------------------------
# KB_1
# ---------------------------------------------------------------------------

def overlap_one_groups(ctx: WeilContext) -> dict:
    """sigma -> pairs (a, b) of type indices with T_a cap T_b = {sigma-hat}, T_a(sigma-hat) = sigma."""
    sb = secant_basis(ctx)
    hats = real_embeddings(ctx.spec)
    groups: dict = {s: [] for s in ctx.sigmas}
    for a, b in product(range(sb.dim), repeat=2):
        Ta, Tb = sb.types[a], sb.types[b]
        if overlap(Ta, Tb) != 1:
            continue
        idx = next(i for i in range(len(hats)) if Ta.signs[i] == Tb.signs[i])
        groups[(hats[idx], Ta.signs[idx])].append((a, b))
    return groups


def perp_top(ctx: WeilContext, sigma: tuple[int, int]) -> Multivector:
    """A generator of the line wedge^top(V_sigma^perp), V_sigma^perp = sum_{sigma' != conj sigma} V_sigma'.

    Built as iterated contraction of the volume form by the covectors (v, .)
    for v in a basis of V_sigma, which span the annihilator of V_sigma^perp.
    """
    def build():
        G = ctx.gram
        x = Multivector(ctx.rank, {(1 << ctx.rank) - 1: ONE})
        for v in ctx.V_sigma[sigma]:
            x = contract(la.matvec(G, v), x)
        return x
    return ctx.memo(("perp_top", sigma), build)


def line_ratio(x: Multivector, line: Multivector):
    """lam with x = lam * line, or None when x is not on the line."""
    if line.is_zero():
        raise ValueError("zero line generator")
    m0 = min(line.terms)
    lam = simplify(x.coeff(m0) * coeff_inv(line.coeff(m0)))
    if (line.scale(lam) - x).is_zero():
        return lam
    return None


def kb1_gauge(ctx: WeilContext) -> dict:
    """(a, b) -> lambda with the degree d(e-1) part of varphi~(ell_a (x) ell_b) = lambda * t_sigma."""
    def build():
        from .orlov import phi_check_box, duality_D_inverse
        sb = secant_basis(ctx)
        ell = ell_all(ctx)
        d = ctx.d
        out = {}
        for sigma, pairs in overlap_one_groups(ctx).items():
            t_sigma = perp_top(ctx, sigma)
            for a, b in pairs:
                z = phi_check_box(ell[sb.types[a]], ell[sb.types[b]], grades=(d, d))
                proj = duality_D_inverse(z)
                lam = line_ratio(proj, t_sigma)
                if lam is None or not lam:
                    raise AssertionError(f"projection of pair {(a, b)} is off the line for {sigma_label(sigma)}")
                out[(a, b)] = lam
        return out
    return ctx.memo("kb1_gauge", build)


@dataclass
class KB1Result:
    member: bool
    sums: dict  # sigma -> normalized sum
    scales: dict  # (T, T') labels -> gauge factor

    def to_json(self) -> dict:
        return {
            "member": self.member,
            "sums": {sigma_label(s): coeff_to_json(v) for s, v in sorted(self.sums.items(), reverse=True)},
            "scales": {k: coeff_to_json(v) for k, v in sorted(self.scales.items())},
        }


def kb1_sums(ctx: WeilContext, c1: BBClass) -> dict:
    sb = secant_basis(ctx)
    L = ell_pair_matrix(sb, c1)
    gauge = kb1_gauge(ctx)
    sums = {}
    for sigma, pairs in overlap_one_groups(ctx).items():
        s = ZERO
        for a, b in pairs:
            if L[a][b]:
                s = s + L[a][b] * gauge[(a, b)]
        sums[sigma] = simplify(s)
    return sums


def kb1_test(ctx: WeilContext, c1: BBClass) -> KB1Result:
    """Membership of c1 in KB_1 through the per-sigma normalized sums."""
    comps = bb_decompose(ctx, c1)
    for k, ck in enumerate(comps):
        if k != 1 and not ck.is_zero():
            raise NotInBB1(f"class has a non-zero component in BB_{k}")
    sb = secant_basis(ctx)
    sums = kb1_sums(ctx, c1)
    scales = {f"{sb.types[a].label()}|{sb.types[b].label()}": v for (a, b), v in kb1_gauge(ctx).items()}
    return KB1Result(all(not v for v in sums.values()), sums, scales)


def kb1_subspace(ctx: WeilContext) -> Subspace:
    """Rational points of KB_1 (flattened named coordinates)."""
    def build():
        m = secant_basis(ctx).dim
        BB1 = bb_subspace(ctx, 1)
        rows = []
        for v in BB1.basis():
            sums = kb1_sums(ctx, BBClass.from_flat(v, m))
            flat = {}
            for idx, sigma in enumerate(ctx.sigmas):
                val = sums[sigma]
                coords = val.to_json() if isinstance(val, TowerElt) else [str(val), "0", "0", "0"]
                for j, cstr in enumerate(coords):
                    q = mpq(cstr)
                    if q:
                        flat[4 * idx + j] = q
            rows.append(flat)
        out = Subspace()
        basis = BB1.basis()
        for rel in kernel(rows):
            v: dict = {}
            for i, c in rel.items():
                for key, x in basis[i].items():
                    v[key] = simplify(v.get(key, ZERO) + c * x)
            out.add({k: x for k, x in v.items() if x})
        return out
    return ctx.memo("KB1", build)


def bb_degree_d_images(ctx: WeilContext) -> dict:
    """(i, j) -> degree d part of phi-check(b_i (x) b_j) for the named basis of B."""
    def build():
        from .orlov import phi_check_box
        sb = secant_basis(ctx)
        d = ctx.d
        return {
            (i, j): phi_check_box(x, y, grades=(d, d))
            for i, x in enumerate(sb.vectors)
            for j, y in enumerate(sb.vectors)
        }
    return ctx.memo("bb_degree_d", build)


def bb1_to_hw(ctx: WeilContext) -> dict:
    """Rank and image of BB_1 -> wedge^d V (phi-check, then degree d), compared with HW."""
    m = secant_basis(ctx).dim
    imgs = bb_degree_d_images(ctx)
    bb1 = bb_subspace(ctx, 1)
    image = Subspace(None)
    for v in bb1.basis():
        out = Multivector.zero(ctx.rank)
        for idx, c in v.items():
            out = out + imgs[(idx // m, idx % m)].scale(c)
        image.add(out.terms)
    return {
        "dimBB1": bb1.dim,
        "dimHW": ctx.HW.dim,
        "rank": image.dim,
        "image_equals_HW": image.equals(ctx.HW),
        "injective": image.dim == bb1.dim,
    }


# ---------------------------------------------------------------------------
# the B_i split
# ---------------------------------------------------------------------------

def bi_split(ctx: WeilContext, beta: Multivector) -> dict:
    """Components beta_i in B_i + B_{e/2 - i} relative to the all-upper type.

    B_i is spanned by the ell_T with |T cap T_1| = i. Returns i -> rational class
    for 0 <= i <= e/4.
    """
    sb = secant_basis(ctx)
    half = ctx.spec.half_e
    T1 = CMType((1,) * half)
    ell = ell_all(ctx)
    lc = sb.ell_coords(sb.coords(beta))
    out = {}
    for i in range(half // 2 + 1):
        comp = Multivector.zero(ctx.h)
        for k, T in enumerate(sb.types):
            if overlap(T, T1) in (i, half - i) and lc[k]:
                comp = comp + ell[T].scale(lc[k])
        out[i] = comp
    return out


def p_k0(ctx: WeilContext) -> Subspace:
    """P_{K_0} = B_0 + B_{e/2}, the plane spanned by alpha and beta."""
    sb = secant_basis(ctx)
    return Subspace(None, [sb.vectors[0].terms, sb.vectors[1].terms])


def p_k1(ctx: WeilContext) -> Subspace:
    sb = secant_basis(ctx)
    return Subspace(None, [v.terms for v in sb.vectors[2:]])


# ---------------------------------------------------------------------------
# <H^{1,1}> and the Theta family (biquadratic tower, d = 4)
# ---------------------------------------------------------------------------

def h11_algebra(ctx: WeilContext) -> Subspace:
    """Rational span of the products Theta_sigma1^i Theta_sigma2^j."""
    def build():
        if not ctx.spec.t:
            return Subspace(None, [power(ctx.rm.theta, k).terms for k in range(ctx.n + 1)])
        T1, T2 = ctx.theta_hat[1], ctx.theta_hat[-1]
        vecs = []
        for i in range(ctx.d + 1):
            for j in range(ctx.d + 1):
                x = wedge(power(T1, i), power(T2, j))
                if not x.is_zero():
                    vecs.append(x.terms)
        return rational_restriction(ctx.spec, vecs)
    return ctx.memo("H11", build)


def _require_family(ctx: WeilContext) -> None:
    if not ctx.spec.t or ctx.d != 4:
        raise NotInFamily("the Theta family needs t > 0 and d = 4")


def sigma_hat(f, s_t: int):
    """The real embedding of f in F with sqrt(t) -> s_t sqrt(t), kept in the tower."""
    return f.galois(s_t, 1) if isinstance(f, TowerElt) else f


def f_dot(ctx: WeilContext, f, k: int) -> Multivector:
    """f . Theta (k = 1) or f . Theta^3 (k = 3) for the F-structures on H^2 and H^6."""
    _require_family(ctx)
    T1, T2 = ctx.theta_hat[1], ctx.theta_hat[-1]
    s1, s2 = sigma_hat(f, 1), sigma_hat(f, -1)
    if k == 1:
        out = T1.scale(s1) + T2.scale(s2)
    elif k == 3:
        out = wedge(wedge(T1, T1), T2).scale(3 * s1) + wedge(wedge(T1, T2), T2).scale(3 * s2)
    else:
        raise ValueError("k must be 1 or 3")
    return out.map_coeffs(simplify)


def theta_family_class(ctx: WeilContext, f1, f2) -> Multivector:
    """f1 . Theta + f2 . Theta^3."""
    return f_dot(ctx, f1, 1) + f_dot(ctx, f2, 3)


def _family_solver(ctx: WeilContext):
    def build():
        spec = ctx.spec
        gens = []
        for k in (1, 3):
            for u in (ONE, spec.sqrt_t):
                gens.append(f_dot(ctx, u, k).terms)
        return Subspace(None, gens, track=True)
    return ctx.memo("family_solver", build)


def theta_family_coords(ctx: WeilContext, x: Multivector) -> tuple:
    """(f1, f2) in F^2 with x = f1 . Theta + f2 . Theta^3; NotInFamily otherwise."""
    _require_family(ctx)
    sol = _family_solver(ctx).solve(x.terms)
    if sol is None:
        raise NotInFamily("class is not of the form f1.Theta + f2.Theta^3")
    spec = ctx.spec
    g = [sol.get(i, ZERO) for i in range(4)]
    return spec.elt(g[0], g[1]), spec.elt(g[2], g[3])


def b_family(ctx: WeilContext, h) -> Subspace:
    """B_{sqrt(-q) h . Theta}: rational span of exp(sqrt(-q)(+-h1 Theta_1 +- h2 Theta_2))."""
    _require_family(ctx)
    key = ("Bfam", tuple(h.to_json()) if isinstance(h, TowerElt) else str(h))

    def build():
        T1, T2 = ctx.theta_hat[1], ctx.theta_hat[-1]
        h1, h2 = sigma_hat(h, 1), sigma_hat(h, -1)
        vecs = []
        for s1, s2 in product((1, -1), repeat=2):
            form = (T1.scale(s1 * h1) + T2.scale(s2 * h2)).scale(ctx.spec.sqrt_mq)
            vecs.append(exp_truncated(form.map_coeffs(simplify)).terms)
        return rational_restriction(ctx.spec, vecs)
    return ctx.memo(key, build)


def h2h6_part(ctx: WeilContext, space: Subspace) -> Subspace:
    """space intersected with H^2 + H^6."""
    keep = (2, 2 * ctx.n - 2)
    rows = space.basis()
    proj = [{m: c for m, c in r.items() if m.bit_count() not in keep} for r in rows]
    out = Subspace()
    for rel in kernel(proj):
        v: dict = {}
        for i, c in rel.items():
            for m, x in rows[i].items():
                v[m] = simplify(v.get(m, ZERO) + c * x)
        out.add({m: x for m, x in v.items() if x})
    return out


def family_graph_f2(ctx: WeilContext, f1, h):
    """The f2 with f1.Theta + f2.Theta^3 in B_{sqrt(-q) h.Theta}: -(q/6) gamma(f1) h^2."""
    return simplify(f1.gamma() * h * h * (-ctx.spec.q / 6))


def m_f(ctx: WeilContext, f, x: Multivector) -> Multivector:
    """M_f(x_2, x_6) = (f^2 . x_2, Nm(f^2) x_6) on the Theta family."""
    f1, f2 = theta_family_coords(ctx, x)
    f_sq = f * f
    return theta_family_class(ctx, f_sq * f1, f2 * nm_F_Q(f_sq))


def pullback(ctx: WeilContext, f, x: Multivector) -> Multivector:
    """g^* = wedge^* eta^(f) on H^*(X)."""
    M = ctx.rm.eta_hat(f)
    images = [Multivector.vector(ctx.h, [M[r][c] for r in range(ctx.h)]) for c in range(ctx.h)]
    return substitute(images, x)


@dataclass
class FamilyVerdict:
    member: bool
    f1: object
    f2: object
    predicted_f2: object
    in_p_k0: bool

    def to_json(self) -> dict:
        return {
            "member": self.member,
            "f1": coeff_to_json(self.f1),
            "f2": coeff_to_json(self.f2),
            "predicted_f2": coeff_to_json(self.predicted_f2),
            "in_P_K0": self.in_p_k0,
        }


def b_theta_family_test(ctx: WeilContext, x: Multivector, f) -> FamilyVerdict:
    """Decide x in B_{sqrt(-q) f.Theta} for x in the Theta family of H^2 + H^6.

    The subspace check and the graph description must agree; a disagreement
    is an internal error.
    """
    f1, f2 = theta_family_coords(ctx, x)
    pred = family_graph_f2(ctx, f1, f)
    member = b_family(ctx, f).member(x.terms)
    if member != (f2 == pred and not x.is_zero()) and not x.is_zero():
        raise AssertionError("graph description disagrees with the spinor span")
    return FamilyVerdict(member, f1, f2, pred, p_k0(ctx).member(x.terms))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def secant_report(ctx: WeilContext) -> dict:
    sb = secant_basis(ctx)
    m = sb.dim
    kb1 = kb1_subspace(ctx)
    certs = []
    for v in bb_subspace(ctx, 1).basis():
        sums = kb1_sums(ctx, BBClass.from_flat(v, m))
        certs.append({
            "c1": BBClass.from_flat(v, m).to_json(),
            "sums": {sigma_label(s): coeff_to_json(val) for s, val in sorted(sums.items(), reverse=True)},
        })
    return {
        "basis": sb.to_json(),
        "dimB": sb.dim,
        "bb_dims": bb_dims(ctx),
        "dimKB1": kb1.dim,
        "kb1_basis": [BBClass.from_flat(v, m).to_json() for v in kb1.basis()],
        "sum_certificates": certs,
        "gauge": {f"{sb.types[a].label()}|{sb.types[b].label()}": coeff_to_json(v)
                  for (a, b), v in sorted(kb1_gauge(ctx).items())},
    }
