"""Cohomological Orlov transform phi: H*(X x X) -> H*(X x X^) and the kappa class.

Generators. H*(X): a_0..a_{h-1} (h = 2n). H*(X^): the dual classes b_i.
H*(X x X): a_i on the first factor, a'_i = generator h + i on the second.
H*(X x X^) = wedge^* V with a_i at index i and b_i at index h + i.

Conventions (all fixed here, checked by the Mukai inversion test):
  c_1(P) = sum_i a_i ^ b_i on X x X^;
  int_X a_0 ^ ... ^ a_{h-1} = 1 and int_X^ b_0 ^ ... ^ b_{h-1} = ORIENT_HAT;
  fiber integration over a factor reads off that factor's top monomial
  after moving it next to the factor's position (first or second).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from gmpy2 import mpq

from .errors import ZeroRank
from .exterior import (
    Multivector,
    _prefix_parity_mask,
    substitute,
    tau,
    times_exp,
    wedge,
    wedge_sign,
)
from .fieldtower import ONE, ZERO, coeff_inv, coeff_to_json, rat_str, simplify


# Orientation of X^ relative to the dual basis. +1 is the only choice for
# which phi_P^ o phi_P = (-1)^n (-1)^*; the test-suite checks both signs.
ORIENT_HAT = 1


def orient_hat(n: int) -> int:
    """Orientation sign of X^ (independent of n in this normalization)."""
    return ORIENT_HAT


# ---------------------------------------------------------------------------
# Poincare transforms on monomials
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _poincare_tables(h: int, o: int) -> tuple[tuple, tuple]:
    """Signed complement tables for phi_P (X -> X^) and phi_P^ (X^ -> X).

    fwd[S] = s with phi_P(a_S) = s b_{S^c}; bwd[R] = s with phi_P^(b_R) = s a_{R^c}.
    """
    full = (1 << h) - 1
    fwd = [0] * (1 << h)
    bwd = [0] * (1 << h)
    for S in range(1 << h):
        C = full ^ S
        # a_S ^ prod_{i in C} (a_i b_i); keep the term with all a's
        sgn = 1
        cur_a = S
        cur_b = 0
        for i in range(h):
            if C >> i & 1:
                # (a_S-part a-monomial)(b-monomial) ^ a_i ^ b_i
                # move a_i past the current b monomial, then insert both
                if (cur_b).bit_count() & 1:
                    sgn = -sgn
                sgn *= wedge_sign(cur_a, 1 << i)
                cur_a |= 1 << i
                sgn *= wedge_sign(cur_b, 1 << i)
                cur_b |= 1 << i
        # now sgn * a_full ^ b_C ; integrate over X (first factor)
        fwd[S] = sgn
    for R in range(1 << h):
        C = full ^ R
        # prod_{i in C}(a_i b_i) ^ b_R, keep term with all b's
        sgn = 1
        cur_a = 0
        cur_b = 0
        for i in range(h):
            if C >> i & 1:
                if cur_b.bit_count() & 1:
                    sgn = -sgn
                sgn *= wedge_sign(cur_a, 1 << i)
                cur_a |= 1 << i
                sgn *= wedge_sign(cur_b, 1 << i)
                cur_b |= 1 << i
        # a_C ^ b_C ^ b_R
        sgn *= wedge_sign(cur_b, R)
        # a_C ^ b_full, integrate over X^ (second factor)
        bwd[R] = sgn * o
    return tuple(fwd), tuple(bwd)


def fm_poincare(gamma: Multivector, direction: str = "X_to_Xhat", orientation: int | None = None) -> Multivector:
    """phi_P (X -> X^), phi_P^ (X^ -> X) and their inverses on classes.

    ``direction`` is one of 'X_to_Xhat', 'Xhat_to_X', 'X_to_Xhat_inverse',
    'Xhat_to_X_inverse'. Classes on X^ use generators b_i at positions 0..h-1.
    ``orientation`` overrides ORIENT_HAT (used to show the other sign fails).
    """
    h = gamma.rank
    o = orient_hat(h // 2) if orientation is None else orientation
    fwd, bwd = _poincare_tables(h, o)
    full = (1 << h) - 1
    out = {}
    for m, c in gamma.terms.items():
        if direction == "X_to_Xhat":
            out[full ^ m] = c if fwd[m] > 0 else -c
        elif direction == "Xhat_to_X":
            out[full ^ m] = c if bwd[m] > 0 else -c
        elif direction == "Xhat_to_X_inverse":
            # phi_P^(b_R) = s a_{R^c}  =>  inverse(a_U) = s b_{U^c}
            R = full ^ m
            out[R] = c if bwd[R] > 0 else -c
        elif direction == "X_to_Xhat_inverse":
            S = full ^ m
            out[S] = c if fwd[S] > 0 else -c
        else:
            raise ValueError(f"unknown direction {direction!r}")
    return Multivector(h, out, _trusted=True)


def minus_one_pullback(x: Multivector) -> Multivector:
    """(-1)^*: multiply degree k by (-1)^k."""
    return x.grade_signs(lambda k: -1 if k % 2 else 1)


# ---------------------------------------------------------------------------
# the Orlov transform
# ---------------------------------------------------------------------------

def box(x: Multivector, y: Multivector) -> Multivector:
    """x (x) y on X x X: x on the first factor, y on the second."""
    h = x.rank
    return wedge(x.embed(2 * h, 0), y.embed(2 * h, h))


def mu_transport(c: Multivector, direction: str = "pull") -> Multivector:
    """mu^* (pull) or mu_* = (mu^*)^{-1} (push) for mu(x, y) = (x + y, y)."""
    h = c.rank // 2
    images = []
    sgn = 1 if direction == "pull" else -1
    for i in range(h):
        images.append(Multivector(c.rank, {1 << i: ONE, 1 << (h + i): mpq(sgn)}))
    for i in range(h):
        images.append(Multivector.gen(c.rank, h + i))
    if direction not in ("pull", "push"):
        raise ValueError(f"unknown direction {direction!r}")
    return substitute(images, c)


def _second_factor(c: Multivector, direction: str) -> Multivector:
    """Apply phi_P^ or its inverse to the second Kunneth factor."""
    h = c.rank // 2
    n = h // 2
    fwd, bwd = _poincare_tables(h, orient_hat(n))
    full = (1 << h) - 1
    low = full
    out = {}
    for m, v in c.terms.items():
        S, U = m & low, m >> h
        if direction == "inverse":
            # a'_U -> s b_{U^c}
            R = full ^ U
            s = bwd[R]
            key = S | (R << h)
        else:
            # b_R -> s a'_{R^c}
            R = U
            s = bwd[R]
            key = S | ((full ^ R) << h)
        out[key] = v if s > 0 else -v
    return Multivector(c.rank, out, _trusted=True)


def orlov_phi(c: Multivector) -> Multivector:
    """phi = (id x phi_P^)^{-1} o mu^* on a class of X x X."""
    return _second_factor(mu_transport(c, "pull"), "inverse")


def orlov_phi_inverse(z: Multivector) -> Multivector:
    """phi^{-1} = mu^*^{-1} o (id x phi_P^) on a class of X x X^."""
    return mu_transport(_second_factor(z, "forward"), "push")


def phi_box(x: Multivector, y: Multivector, grades: tuple[int, int] | None = None) -> Multivector:
    """phi(x (x) y) computed directly, optionally restricted to a grade window."""
    h = x.rank
    n = h // 2
    full = (1 << h) - 1
    _, bwd = _poincare_tables(h, orient_hat(n))
    gmin, gmax = (0, 2 * h) if grades is None else grades
    out: dict = {}
    for my, cy in y.terms.items():
        ny = my.bit_count()
        ppm_y = _prefix_parity_mask(my)
        for mx, cx in x.terms.items():
            nx = mx.bit_count()
            free = mx & ~my
            coef = cx * cy
            sub = free
            while True:
                S2 = sub
                n2 = S2.bit_count()
                g = nx - 2 * n2 + h - ny
                if gmin <= g <= gmax:
                    S1 = mx ^ S2
                    par = (S1 & _prefix_parity_mask(S2)).bit_count() + (S2 & ppm_y).bit_count()
                    U = S2 | my
                    R = full ^ U
                    if bwd[R] < 0:
                        par += 1
                    key = S1 | (R << h)
                    val = -coef if par & 1 else coef
                    prev = out.get(key)
                    out[key] = val if prev is None else prev + val
                if sub == 0:
                    break
                sub = (sub - 1) & free
    return Multivector(2 * h, {m: simplify(c) for m, c in out.items() if c}, _trusted=True)


def phi_check_box(x: Multivector, y: Multivector, grades: tuple[int, int] | None = None) -> Multivector:
    """phi-check = phi o (id (x) tau) on x (x) y."""
    return phi_box(x, tau(y), grades)


def phi_check(c: Multivector) -> Multivector:
    """phi-check on a general Kunneth class of X x X."""
    h = c.rank // 2
    # id (x) tau: sign by second-factor degree
    out = {}
    for m, v in c.terms.items():
        k = (m >> h).bit_count()
        out[m] = -v if (k * (k - 1) // 2) % 2 else v
    return orlov_phi(Multivector(c.rank, out, _trusted=True))


# ---------------------------------------------------------------------------
# Poincare-duality comparison and the Chevalley map
# ---------------------------------------------------------------------------

def duality_D(z: Multivector) -> Multivector:
    """D = (phi_P (x) phi_P^{-1}) followed by the factor swap, on wedge^* V.

    a_S b_R -> phi_P(a_S) (x) phi_P^{-1}(b_R) in H*(X^) (x) H*(X), then swapped
    back to H*(X) (x) H*(X^) with the Koszul sign.
    """
    h = z.rank // 2
    n = h // 2
    fwd, bwd = _poincare_tables(h, orient_hat(n))
    full = (1 << h) - 1
    out = {}
    for m, v in z.terms.items():
        S, R = m & full, m >> h
        Sc, Rc = full ^ S, full ^ R
        s = fwd[S]
        # phi_P^{-1}(b_R): phi_P(a_U) = fwd[U] b_{U^c}, so phi_P^{-1}(b_R) = fwd[R^c] a_{R^c}
        s *= fwd[Rc]
        if (Sc.bit_count() * Rc.bit_count()) % 2:
            s = -s
        key = Rc | (Sc << h)
        out[key] = v if s > 0 else -v
    return Multivector(z.rank, out, _trusted=True)


def duality_D_inverse(z: Multivector) -> Multivector:
    h = z.rank // 2
    n = h // 2
    fwd, _ = _poincare_tables(h, orient_hat(n))
    full = (1 << h) - 1
    out = {}
    for m, v in z.terms.items():
        Rc, Sc = m & full, m >> h
        S, R = full ^ Sc, full ^ Rc
        s = fwd[S] * fwd[Rc]
        if (Sc.bit_count() * Rc.bit_count()) % 2:
            s = -s
        key = S | (R << h)
        out[key] = v if s > 0 else -v
    return Multivector(z.rank, out, _trusted=True)


def chevalley_tilde_box(x: Multivector, y: Multivector) -> Multivector:
    """varphi~(x (x) y) = D^{-1}(phi-check(x (x) y))."""
    return duality_D_inverse(phi_check_box(x, y))


def chevalley_tilde(c: Multivector) -> Multivector:
    return duality_D_inverse(phi_check(c))


@dataclass
class FiltrationCheck:
    """Grades and leading lines of phi-check and varphi~ on l_T (x) l_T'."""

    k: int
    min_grade: int | None
    bottom_on_line: bool
    max_grade_tilde: int | None
    top_on_line: bool
    expected_min: int
    expected_max: int

    @property
    def ok(self) -> bool:
        return (
            self.min_grade == self.expected_min
            and self.max_grade_tilde == self.expected_max
            and self.bottom_on_line
            and self.top_on_line
        )


def filtration_check(ctx, T, U) -> FiltrationCheck:
    """phi-check(l_T (x) l_U) starts in degree dk on the line wedge^{dk}(W_T cap W_U),
    and varphi~ of it ends in degree d(e-k) on the line wedge^{d(e-k)}(W_T + W_U),
    where k = |T cap U|.
    """
    from .exterior import Subspace
    from .fieldtower import overlap
    from .secant import ell_T, line_ratio
    from .spinclifford import dict_to_list, list_to_dict, subspace_line

    d, e = ctx.d, ctx.e
    k = overlap(T, U)
    z = phi_check_box(ell_T(ctx, T), ell_T(ctx, U))
    wt = Subspace(ctx.rank, [list_to_dict(v) for v in ctx.W_T(T)])
    wu = Subspace(ctx.rank, [list_to_dict(v) for v in ctx.W_T(U)])
    meet = [dict_to_list(r, ctx.rank) for r in wt.intersect(wu).rows]
    join = [dict_to_list(r, ctx.rank) for r in wt.sum(wu).rows]
    bottom = line_ratio(z.grade_part(d * k), subspace_line(ctx.qs, meet))
    zt = duality_D_inverse(z)
    top = line_ratio(zt.grade_part(d * (e - k)), subspace_line(ctx.qs, join))
    return FiltrationCheck(
        k=k,
        min_grade=z.min_grade(),
        bottom_on_line=bool(bottom),
        max_grade_tilde=zt.max_grade(),
        top_on_line=bool(top),
        expected_min=d * k,
        expected_max=d * (e - k),
    )


# ---------------------------------------------------------------------------
# kappa
# ---------------------------------------------------------------------------

def kappa(x: Multivector, max_grade: int | None = None) -> Multivector:
    """kappa(x) = x ^ exp(-x_1 / r) with r the scalar part and x_1 the degree-2 part."""
    r = x.scalar_part()
    if not r:
        raise ZeroRank("kappa needs a class of non-zero rank")
    x1 = x.grade_part(2)
    return times_exp(x, x1.scale(-coeff_inv(r)), max_grade=max_grade)


def integrate_X(x: Multivector):
    """int_X of a class on X (top coefficient)."""
    return x.coeff((1 << x.rank) - 1)


# ---------------------------------------------------------------------------
# the criterion
# ---------------------------------------------------------------------------

@dataclass
class CriterionReport:
    """Verdict record: r, bucket data, KB_1 test, kappa_{d/2} and its split."""

    r: object
    buckets: dict
    kb1_member: bool | None
    kb1_sums: dict
    kappa_d2: Multivector | None
    sym_part: Multivector | None
    hw_part: Multivector | None
    sufficient: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return bool(self.r) and self.kb1_member is False and self.hw_part is not None and not self.hw_part.is_zero()

    def to_json(self) -> dict:
        from .secant import sigma_label
        return {
            "r": rat_str(self.r) if not hasattr(self.r, "to_json") else self.r.to_json(),
            "buckets": {str(k): v for k, v in sorted(self.buckets.items())},
            "kb1": {
                "member": self.kb1_member,
                "sums": [coeff_to_json(v) for _, v in sorted(self.kb1_sums.items(), reverse=True)],
                "sigmas": [sigma_label(s) for s in sorted(self.kb1_sums, reverse=True)],
            },
            "kappa_d2": None if self.kappa_d2 is None else self.kappa_d2.to_json(),
            "sym_part": None if self.sym_part is None else self.sym_part.to_json(),
            "hw_part": None if self.hw_part is None else self.hw_part.to_json(),
            "hw_nonzero": bool(self.hw_part is not None and not self.hw_part.is_zero()),
            "sufficient": dict(sorted(self.sufficient.items())),
            "notes": list(self.notes),
            "verdict": "pass" if self.verdict else "fail",
        }


def criterion_check(ctx, chF1: Multivector, chF2: Multivector) -> CriterionReport:
    """Run the kappa criterion on the Chern characters of F_1 and F_2.

    The class fed to phi-check is c = ch F_1 (x) tau(ch F_2), so that
    phi-check(c) = phi(ch F_1 (x) ch F_2) is the Chern character of the Orlov
    image of F_1 boxtimes F_2 and r is the Euler pairing of ch F_1 and ch F_2.
    """
    from .secant import BBClass, bb_decompose, bi_split, kb1_test, secant_basis

    d = ctx.d
    if d <= 2:
        raise ValueError("the criterion needs d > 2")
    sb = secant_basis(ctx)
    y = tau(chF2)
    c = BBClass.from_pair(sb, chF1, y)
    comps = bb_decompose(ctx, c)
    buckets = {k: not ck.is_zero() for k, ck in enumerate(comps)}
    kb1 = kb1_test(ctx, comps[1]) if ctx.spec.half_e >= 1 else None

    # sufficient conditions on the split of the second factor
    split_y = bi_split(ctx, y)
    split_x = bi_split(ctx, chF1)
    check0 = phi_check_box(split_x[0], split_y[0], grades=(0, 0)).scalar_part() if split_x[0] and split_y[0] else ZERO
    sufficient = {
        "beta0_nonzero": not split_y[0].is_zero(),
        "beta1_nonzero": len(split_y) > 1 and not split_y[1].is_zero(),
        "phi_alpha0_beta0_rank_nonzero": bool(check0),
    }

    z = phi_check_box(chF1, y, grades=(0, d))
    r = z.scalar_part()
    report = CriterionReport(
        r=r,
        buckets=buckets,
        kb1_member=None if kb1 is None else kb1.member,
        kb1_sums={} if kb1 is None else kb1.sums,
        kappa_d2=None,
        sym_part=None,
        hw_part=None,
        sufficient=sufficient,
    )
    if not r:
        report.notes.append("rank is zero: kappa undefined")
        return report
    kap = kappa(z, max_grade=d)
    kd = kap.grade_part(d)
    sym, hw = ctx.decompose_Ad(kd)
    report.kappa_d2 = kd
    report.sym_part = sym
    report.hw_part = hw
    return report
