"""Exact arithmetic in the tower Q < F = Q(sqrt t) < K = F(sqrt -q).

An element is stored as four rationals (a, b, c, d) standing for

    a + b*sqrt(t) + c*sqrt(-q) + d*sqrt(-t*q)

with t = 0 encoding the imaginary quadratic case F = Q (then b = d = 0).
Rationals are ``gmpy2.mpq``; they mix freely with ``int`` and ``Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq

from .errors import DivisionByZero, FieldMismatch

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)


def rat(x) -> mpq:
    """Coerce int, Fraction, mpq or a 'p/q' string into an mpq."""
    if isinstance(x, str):
        s = x.strip().replace("−", "-")
        if not s:
            raise ValueError("empty rational")
        return mpq(s)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def rat_str(x) -> str:
    """Serialize a rational as 'p/q' in lowest terms (denominator always shown)."""
    x = rat(x)
    return f"{x.numerator}/{x.denominator}"


def coeff_to_json(c):
    """A coefficient as JSON: 'p/q' when rational, else the four tower coordinates."""
    c = simplify(c)
    if isinstance(c, TowerElt):
        return c.to_json()
    return rat_str(c)


def is_rational_square(x) -> bool:
    x = rat(x)
    if x < 0:
        return False
    return bool(gmpy2.is_square(x.numerator)) and bool(gmpy2.is_square(x.denominator))


def rational_sqrt(x) -> mpq:
    x = rat(x)
    if not is_rational_square(x):
        raise ValueError(f"{x} is not a rational square")
    return mpq(gmpy2.isqrt(x.numerator), gmpy2.isqrt(x.denominator))


def is_squarefree(t: int) -> bool:
    if t < 2:
        return t == 1
    k = 2
    while k * k <= t:
        if t % (k * k) == 0:
            return False
        k += 1
    return True


@dataclass(frozen=True)
class TowerSpec:
    """The tower data: t squarefree (t = 0 means F = Q) and q > 0 rational."""

    t: int
    q: mpq

    def __post_init__(self):
        object.__setattr__(self, "q", rat(self.q))
        if self.t < 0 or (self.t > 0 and not is_squarefree(self.t)) or self.t == 1:
            raise ValueError(f"t must be 0 or a squarefree integer > 1, got {self.t}")
        if self.q <= 0:
            raise ValueError(f"q must be positive, got {self.q}")

    @property
    def e(self) -> int:
        return 4 if self.t > 0 else 2

    @property
    def half_e(self) -> int:
        return self.e // 2

    # convenient constants
    def elt(self, a=0, b=0, c=0, d=0) -> "TowerElt":
        return TowerElt(self, a, b, c, d)

    @property
    def one(self) -> "TowerElt":
        return TowerElt(self, 1)

    @property
    def sqrt_t(self) -> "TowerElt":
        if self.t == 0:
            raise FieldMismatch("sqrt(t) is not available when t = 0")
        return TowerElt(self, 0, 1)

    @property
    def sqrt_mq(self) -> "TowerElt":
        return TowerElt(self, 0, 0, 1)

    @property
    def sqrt_mtq(self) -> "TowerElt":
        if self.t == 0:
            raise FieldMismatch("sqrt(-tq) is not available when t = 0")
        return TowerElt(self, 0, 0, 0, 1)

    def to_json(self) -> dict:
        return {"t": self.t, "q": rat_str(self.q)}


class TowerElt:
    """Immutable element of K~ = Q(sqrt t, sqrt -q)."""

    __slots__ = ("spec", "a", "b", "c", "d")

    def __init__(self, spec: TowerSpec, a=0, b=0, c=0, d=0):
        self.spec = spec
        self.a = mpq(a)
        self.b = mpq(b)
        self.c = mpq(c)
        self.d = mpq(d)
        if spec.t == 0 and (self.b or self.d):
            raise FieldMismatch("sqrt(t) coordinates must vanish when t = 0")

    # -- coercion ---------------------------------------------------------
    def _coerce(self, other) -> "TowerElt | None":
        if isinstance(other, TowerElt):
            if other.spec != self.spec:
                raise FieldMismatch(f"tower mismatch: {self.spec} vs {other.spec}")
            return other
        if isinstance(other, (int, type(ZERO), Fraction)):
            return TowerElt(self.spec, other)
        return None

    @property
    def coords(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TowerElt(self.spec, self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return TowerElt(self.spec, -self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return TowerElt(self.spec, self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, TowerElt):
            if other.spec != self.spec:
                raise FieldMismatch(f"tower mismatch: {self.spec} vs {other.spec}")
            t, q = self.spec.t, self.spec.q
            a1, b1, c1, d1 = self.a, self.b, self.c, self.d
            a2, b2, c2, d2 = other.a, other.b, other.c, other.d
            return TowerElt(
                self.spec,
                a1 * a2 + t * b1 * b2 - q * c1 * c2 - t * q * d1 * d2,
                a1 * b2 + b1 * a2 - q * (c1 * d2 + d1 * c2),
                a1 * c2 + c1 * a2 + t * (b1 * d2 + d1 * b2),
                a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2,
            )
        if isinstance(other, (int, type(ZERO), Fraction)):
            k = mpq(other)
            return TowerElt(self.spec, self.a * k, self.b * k, self.c * k, self.d * k)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inv()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        out = TowerElt(self.spec, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- Galois -----------------------------------------------------------
    def galois(self, s_t: int, s_q: int) -> "TowerElt":
        """Apply the automorphism sqrt(t) -> s_t sqrt(t), sqrt(-q) -> s_q sqrt(-q)."""
        return TowerElt(self.spec, self.a, s_t * self.b, s_q * self.c, s_t * s_q * self.d)

    def gamma(self) -> "TowerElt":
        return self.galois(-1, 1)

    def iota(self) -> "TowerElt":
        return self.galois(1, -1)

    conj = iota

    def norm_to_Q(self) -> mpq:
        """Product of all Galois conjugates (an element of Q)."""
        if self.spec.t == 0:
            p = self * self.iota()
        else:
            p = self * self.gamma() * self.iota() * self.galois(-1, -1)
        return p.a

    def inv(self) -> "TowerElt":
        if self.is_zero():
            raise DivisionByZero("inverse of zero in the tower field")
        if self.spec.t == 0:
            others = self.iota()
        else:
            others = self.gamma() * self.iota() * self.galois(-1, -1)
        n = (self * others).a
        return others * (ONE / n)

    # -- predicates and projections --------------------------------------
    def is_zero(self) -> bool:
        return not (self.a or self.b or self.c or self.d)

    def __bool__(self):
        return not self.is_zero()

    def in_F(self) -> bool:
        return not (self.c or self.d)

    def is_rational(self) -> bool:
        return not (self.b or self.c or self.d)

    def in_K_minus(self) -> bool:
        return not (self.a or self.b)

    def to_rational(self) -> mpq:
        if not self.is_rational():
            raise FieldMismatch(f"{self} is not rational")
        return self.a

    def __eq__(self, other):
        if isinstance(other, TowerElt):
            return self.spec == other.spec and self.coords == other.coords
        if isinstance(other, (int, type(ZERO), Fraction)):
            return self.is_rational() and self.a == other
        return NotImplemented

    def __hash__(self):
        if self.is_rational():
            return hash(self.a)
        return hash((self.spec, self.coords))

    def __repr__(self):
        parts = []
        for coef, sym in zip(self.coords, ("", "√t", "√-q", "√-tq")):
            if coef:
                parts.append(f"{coef}{'*' + sym if sym else ''}")
        return "(" + (" + ".join(parts) if parts else "0") + ")"

    def to_json(self) -> list:
        return [rat_str(x) for x in self.coords]

    @classmethod
    def from_json(cls, spec: TowerSpec, data: Sequence) -> "TowerElt":
        return cls(spec, *[rat(x) for x in data])


# ---------------------------------------------------------------------------
# coefficient helpers shared by the linear algebra layers
# ---------------------------------------------------------------------------

def is_tower(x) -> bool:
    return isinstance(x, TowerElt)


def as_tower(spec: TowerSpec, x) -> TowerElt:
    if isinstance(x, TowerElt):
        return x
    return TowerElt(spec, x)


def coeff_inv(x):
    """Inverse of a coefficient that is either rational or a tower element."""
    if isinstance(x, TowerElt):
        if x.is_rational():
            return ONE / x.a
        return x.inv()
    if x == 0:
        raise DivisionByZero("inverse of zero")
    return ONE / mpq(x)


def simplify(x):
    """Collapse a rational tower element to mpq so fast paths stay rational."""
    if isinstance(x, TowerElt) and x.is_rational():
        return x.a
    return x


def coeff_galois(x, s_t: int, s_q: int):
    if isinstance(x, TowerElt):
        return simplify(x.galois(s_t, s_q))
    return x


# ---------------------------------------------------------------------------
# traces, norms, signs
# ---------------------------------------------------------------------------

def tr_F_Q(x: TowerElt) -> mpq:
    """tr_{F/Q} of an element of F."""
    if not x.in_F():
        raise FieldMismatch("trace F/Q needs an element of F")
    return 2 * x.a if x.spec.t > 0 else x.a


def tr_K_Q(x: TowerElt) -> mpq:
    return x.spec.e * x.a


def tr_K_F(x: TowerElt) -> TowerElt:
    return TowerElt(x.spec, 2 * x.a, 2 * x.b)


def nm_K_F(x: TowerElt) -> TowerElt:
    return x * x.iota()


def nm_F_Q(x: TowerElt) -> mpq:
    if not x.in_F():
        raise FieldMismatch("norm F/Q needs an element of F")
    return (x * x.gamma()).a if x.spec.t > 0 else x.a


def sign_at_embedding(x: TowerElt, s_t: int) -> int:
    """Exact sign of sigma(x) for x in F, where sigma(sqrt t) = s_t * sqrt(t) (sqrt(t) > 0)."""
    if not isinstance(x, TowerElt):
        x = mpq(x)
        return (x > 0) - (x < 0)
    if not x.in_F():
        raise FieldMismatch("sign_at_embedding needs an element of F")
    a, b = x.a, s_t * x.b
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: compare a^2 against t b^2
    lhs, rhs = a * a, x.spec.t * b * b
    if lhs == rhs:
        return 0
    return sa if lhs > rhs else sb


def is_square_in_F(x: TowerElt) -> bool:
    return sqrt_in_F(x) is not None


def sqrt_in_F(x: TowerElt) -> TowerElt | None:
    """Return some y in F with y^2 = x, or None."""
    if not x.in_F():
        raise FieldMismatch("sqrt_in_F needs an element of F")
    spec = x.spec
    a, b = x.a, x.b
    if spec.t == 0 or b == 0:
        if is_rational_square(a):
            return TowerElt(spec, rational_sqrt(a))
        if spec.t > 0 and a != 0 and is_rational_square(a / spec.t):
            return TowerElt(spec, 0, rational_sqrt(a / spec.t))
        return None if a != 0 else TowerElt(spec)
    # (u + v sqrt t)^2 = u^2 + t v^2 + 2uv sqrt t
    nrm = a * a - spec.t * b * b
    if not is_rational_square(nrm):
        return None
    m = rational_sqrt(nrm)
    for s in (1, -1):
        u2 = (a + s * m) / 2
        if u2 > 0 and is_rational_square(u2):
            u = rational_sqrt(u2)
            v = b / (2 * u)
            y = TowerElt(spec, u, v)
            if y * y == x:
                return y
    return None


# ---------------------------------------------------------------------------
# Galois group and CM types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaloisElt:
    """Automorphism with sqrt(t) -> s_t sqrt(t) and sqrt(-q) -> s_q sqrt(-q)."""

    s_t: int = 1
    s_q: int = 1

    def __call__(self, x):
        return galois_apply(self, x)

    def __mul__(self, other: "GaloisElt") -> "GaloisElt":
        return GaloisElt(self.s_t * other.s_t, self.s_q * other.s_q)


IDENTITY = GaloisElt(1, 1)
GAMMA = GaloisElt(-1, 1)
IOTA = GaloisElt(1, -1)


def galois_group(spec: TowerSpec) -> list[GaloisElt]:
    if spec.t == 0:
        return [IDENTITY, IOTA]
    return [GaloisElt(a, b) for a in (1, -1) for b in (1, -1)]


def galois_apply(g: GaloisElt, x):
    if isinstance(x, TowerElt):
        if x.spec.t == 0 and g.s_t == -1:
            return x.galois(1, g.s_q)
        return x.galois(g.s_t, g.s_q)
    return x


def real_embeddings(spec: TowerSpec) -> list[int]:
    """Labels of the real embeddings of F by the sign they give to sqrt(t)."""
    return [1, -1] if spec.t > 0 else [1]


def cm_embeddings(spec: TowerSpec) -> list[tuple[int, int]]:
    """All complex embeddings sigma of K as sign pairs (s_t, s_q)."""
    return [(st, sq) for st in real_embeddings(spec) for sq in (1, -1)]


def embed_sign(x: TowerElt, sigma: tuple[int, int]) -> TowerElt:
    """The element sigma(x) written back in the tower (same coordinates, flipped signs)."""
    return x.galois(*sigma) if x.spec.t > 0 else x.galois(1, sigma[1])


@dataclass(frozen=True)
class CMType:
    """signs[i] is the sign of sqrt(-q) under T(sigma_hat_i); sigma_hat order follows real_embeddings."""

    signs: tuple

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("CM-type signs must be +1 or -1")

    def __call__(self, s_hat_index: int) -> int:
        return self.signs[s_hat_index]

    def conjugate(self) -> "CMType":
        return CMType(tuple(-s for s in self.signs))

    def embeddings(self, spec: TowerSpec) -> list[tuple[int, int]]:
        return [(st, sq) for st, sq in zip(real_embeddings(spec), self.signs)]

    def label(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    def __repr__(self):
        return f"CMType({self.label()})"


def enumerate_cm_types(spec: TowerSpec) -> list[CMType]:
    return [CMType(s) for s in product((1, -1), repeat=spec.half_e)]


def overlap(T1: CMType, T2: CMType) -> int:
    """|T1 cap T2|: number of real embeddings where the two types agree."""
    return sum(1 for a, b in zip(T1.signs, T2.signs) if a == b)


def common_embeddings(spec: TowerSpec, T1: CMType, T2: CMType) -> list[tuple[int, int]]:
    return [(st, a) for st, a, b in zip(real_embeddings(spec), T1.signs, T2.signs) if a == b]


def galois_on_type(spec: TowerSpec, g: GaloisElt, T: CMType) -> CMType:
    """The type {g o sigma : sigma in T}."""
    hats = real_embeddings(spec)
    idx = {s: i for i, s in enumerate(hats)}
    st = g.s_t if spec.t > 0 else 1
    return CMType(tuple(T.signs[idx[h * st]] * g.s_q for h in hats))


def galois_orbits(spec: TowerSpec) -> list[list[CMType]]:
    seen: set = set()
    orbits = []
    for T in enumerate_cm_types(spec):
        if T in seen:
            continue
        orb = []
        for g in galois_group(spec):
            U = galois_on_type(spec, g, T)
            if U not in orb:
                orb.append(U)
        seen.update(orb)
        orbits.append(orb)
    return orbits


def tower_arith(op: str, x: TowerElt, y: TowerElt | None = None) -> TowerElt:
    """Dispatch form of the field operations (add, sub, mul, div, inv, conj)."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    if op == "inv":
        return x.inv()
    if op == "conj":
        return x.iota()
    raise ValueError(f"unknown tower op {op!r}")


def parse_F(spec: TowerSpec, pair: Iterable) -> TowerElt:
    """Parse [a, b] meaning a + b sqrt(t)."""
    a, b = list(pair)
    return TowerElt(spec, rat(a), rat(b))
