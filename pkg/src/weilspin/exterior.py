"""Sparse exterior algebra over the tower field plus an exact subspace kit.

A multivector is a dict from generator bitmask to coefficient. Bit i set
means generator i occurs; monomials are ordered increasingly, so the mask
{i1 < i2 < ...} stands for g_i1 ^ g_i2 ^ ... . Coefficients are either
``mpq`` (fast rational path) or ``TowerElt``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator, Mapping

from gmpy2 import mpq

from .errors import AmbientMismatch, FieldMismatch, NonNilpotentOverflow
from .fieldtower import (
    ONE,
    TowerElt,
    TowerSpec,
    coeff_galois,
    coeff_inv,
    rat,
    rat_str,
    simplify,
)


# ---------------------------------------------------------------------------
# sign helpers
# ---------------------------------------------------------------------------

_WIDTH_MASK = (1 << 64) - 1


def _prefix_parity_mask(b: int) -> int:
    """Bit i is set iff an odd number of bits of b lie strictly below i (i < 64)."""
    p = b << 1
    p ^= p << 1
    p ^= p << 2
    p ^= p << 4
    p ^= p << 8
    p ^= p << 16
    p ^= p << 32
    return p & _WIDTH_MASK


def wedge_sign(a: int, b: int) -> int:
    """Sign of reordering g_a ^ g_b into increasing order (a, b disjoint)."""
    return -1 if (a & _prefix_parity_mask(b)).bit_count() & 1 else 1


def below_count(mask: int, i: int) -> int:
    return (mask & ((1 << i) - 1)).bit_count()


def bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


# ---------------------------------------------------------------------------
# Multivector
# ---------------------------------------------------------------------------

class Multivector:
    """Element of the exterior algebra on ``rank`` generators."""

    __slots__ = ("rank", "terms")

    def __init__(self, rank: int, terms: Mapping[int, object] | None = None, _trusted=False):
        self.rank = rank
        if _trusted:
            self.terms = terms
            return
        clean = {}
        if terms:
            lim = 1 << rank
            for m, c in terms.items():
                if m < 0 or m >= lim:
                    raise AmbientMismatch(f"mask {m} outside rank {rank}")
                if c:
                    clean[m] = simplify(c) if isinstance(c, TowerElt) else mpq(c)
        self.terms = clean

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, rank: int) -> "Multivector":
        return cls(rank, {}, _trusted=True)

    @classmethod
    def scalar(cls, rank: int, c=1) -> "Multivector":
        return cls(rank, {0: c})

    @classmethod
    def gen(cls, rank: int, i: int, c=1) -> "Multivector":
        return cls(rank, {1 << i: c})

    @classmethod
    def monomial(cls, rank: int, indices: Iterable[int], c=1) -> "Multivector":
        """Signed monomial g_i1 ^ g_i2 ^ ... in the order given."""
        out = cls.scalar(rank, c)
        for i in indices:
            out = out ^ cls.gen(rank, i)
        return out

    @classmethod
    def vector(cls, rank: int, coords: Mapping[int, object] | list) -> "Multivector":
        items = coords.items() if isinstance(coords, Mapping) else enumerate(coords)
        return cls(rank, {1 << i: c for i, c in items if c})

    # -- basic structure --------------------------------------------------
    def copy(self) -> "Multivector":
        return Multivector(self.rank, dict(self.terms), _trusted=True)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def coeff(self, mask: int):
        return self.terms.get(mask, mpq(0))

    def grades(self) -> list[int]:
        return sorted({m.bit_count() for m in self.terms})

    def grade_part(self, k: int) -> "Multivector":
        return Multivector(self.rank, {m: c for m, c in self.terms.items() if m.bit_count() == k}, _trusted=True)

    def upto(self, k: int) -> "Multivector":
        """Projection onto F^k = sum of grades <= k."""
        return Multivector(self.rank, {m: c for m, c in self.terms.items() if m.bit_count() <= k}, _trusted=True)

    def from_grade(self, k: int) -> "Multivector":
        """Projection onto F_k = sum of grades >= k."""
        return Multivector(self.rank, {m: c for m, c in self.terms.items() if m.bit_count() >= k}, _trusted=True)

    def min_grade(self) -> int | None:
        return min((m.bit_count() for m in self.terms), default=None)

    def max_grade(self) -> int | None:
        return max((m.bit_count() for m in self.terms), default=None)

    def is_rational(self) -> bool:
        return all(not isinstance(c, TowerElt) for c in self.terms.values())

    def scalar_part(self):
        return self.terms.get(0, mpq(0))

    # -- linear structure -------------------------------------------------
    def _check(self, other: "Multivector"):
        if not isinstance(other, Multivector):
            raise TypeError(f"expected Multivector, got {type(other).__name__}")
        if other.rank != self.rank:
            raise AmbientMismatch(f"rank {self.rank} vs {other.rank}")

    def __add__(self, other: "Multivector") -> "Multivector":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                s = v + c
                if s:
                    out[m] = simplify(s)
                else:
                    del out[m]
        return Multivector(self.rank, out, _trusted=True)

    def __neg__(self) -> "Multivector":
        return Multivector(self.rank, {m: -c for m, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + (-other)

    def scale(self, k) -> "Multivector":
        if not k:
            return Multivector.zero(self.rank)
        out = {}
        for m, c in self.terms.items():
            v = c * k
            if v:
                out[m] = simplify(v)
        return Multivector(self.rank, out, _trusted=True)

    def __mul__(self, k):
        if isinstance(k, Multivector):
            return wedge(self, k)
        return self.scale(k)

    def __rmul__(self, k):
        return self.scale(k)

    def __xor__(self, other: "Multivector") -> "Multivector":
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.rank == other.rank and (self - other).is_zero()

    def __hash__(self):
        raise TypeError("Multivector is unhashable")

    def map_coeffs(self, f: Callable) -> "Multivector":
        return Multivector(self.rank, {m: f(c) for m, c in self.terms.items()})

    def galois(self, s_t: int, s_q: int) -> "Multivector":
        return Multivector(self.rank, {m: coeff_galois(c, s_t, s_q) for m, c in self.terms.items()}, _trusted=True)

    def grade_signs(self, sign: Callable[[int], int]) -> "Multivector":
        """Multiply the grade-k part by sign(k)."""
        return Multivector(
            self.rank,
            {m: (c if sign(m.bit_count()) > 0 else -c) for m, c in self.terms.items()},
            _trusted=True,
        )

    def embed(self, new_rank: int, offset: int = 0) -> "Multivector":
        """Shift generators by ``offset`` into an algebra of rank ``new_rank``."""
        if self.rank + offset > new_rank:
            raise AmbientMismatch("embedding does not fit")
        return Multivector(new_rank, {m << offset: c for m, c in self.terms.items()}, _trusted=True)

    def __repr__(self):
        if not self.terms:
            return "Multivector(0)"
        items = sorted(self.terms.items())
        shown = ", ".join(f"{bin(m)}: {c}" for m, c in items[:6])
        more = "" if len(items) <= 6 else f", ... ({len(items)} terms)"
        return f"Multivector(rank={self.rank}; {shown}{more})"

    def to_json(self) -> list:
        out = []
        for m in sorted(self.terms):
            c = self.terms[m]
            coeff = c.to_json() if isinstance(c, TowerElt) else [rat_str(c), "0/1", "0/1", "0/1"]
            out.append({"mask": m, "coeff": coeff})
        return out

    @classmethod
    def from_json(cls, rank: int, data: list, spec: TowerSpec | None = None) -> "Multivector":
        terms = {}
        for item in data:
            coords = [rat(x) for x in item["coeff"]]
            if any(coords[1:]):
                if spec is None:
                    raise FieldMismatch("irrational coefficient needs a TowerSpec")
                terms[item["mask"]] = TowerElt(spec, *coords)
            else:
                terms[item["mask"]] = coords[0]
        return cls(rank, terms)


# ---------------------------------------------------------------------------
# products and derivations
# ---------------------------------------------------------------------------

def wedge(a: Multivector, b: Multivector) -> Multivector:
    if a.rank != b.rank:
        raise AmbientMismatch(f"rank {a.rank} vs {b.rank}")
    out: dict = {}
    get = out.get
    for mb, cb in b.terms.items():
        pmask = _prefix_parity_mask(mb)
        for ma, ca in a.terms.items():
            if ma & mb:
                continue
            c = ca * cb
            if (ma & pmask).bit_count() & 1:
                c = -c
            m = ma | mb
            v = get(m)
            out[m] = c if v is None else v + c
    return Multivector(a.rank, {m: simplify(c) for m, c in out.items() if c}, _trusted=True)


def wedge_all(factors: Iterable[Multivector], rank: int) -> Multivector:
    out = Multivector.scalar(rank)
    for f in factors:
        out = wedge(out, f)
    return out


def power(x: Multivector, k: int) -> Multivector:
    out = Multivector.scalar(x.rank)
    for _ in range(k):
        out = wedge(out, x)
    return out


def contract(xi, x: Multivector) -> Multivector:
    """Left interior product of a covector with a multivector.

    ``xi`` maps generator index to coefficient (dict, list or a grade-1
    Multivector read in the dual basis). Sign rule:
    g_i* _| (g_S) = (-1)^{#S below i} g_{S minus i}.
    """
    if isinstance(xi, Multivector):
        if xi.rank != x.rank:
            raise AmbientMismatch(f"rank {xi.rank} vs {x.rank}")
        if any(m.bit_count() != 1 for m in xi.terms):
            raise ValueError("contract expects a covector (grade 1)")
        items = [((m.bit_length() - 1), c) for m, c in xi.terms.items()]
    elif isinstance(xi, Mapping):
        items = [(i, c) for i, c in xi.items() if c]
    else:
        items = [(i, c) for i, c in enumerate(xi) if c]
    out: dict = {}
    for i, ci in items:
        bit = 1 << i
        low = bit - 1
        for m, c in x.terms.items():
            if not m & bit:
                continue
            v = ci * c
            if (m & low).bit_count() & 1:
                v = -v
            k = m ^ bit
            w = out.get(k)
            out[k] = v if w is None else w + v
    return Multivector(x.rank, {m: simplify(c) for m, c in out.items() if c}, _trusted=True)


def derivation(images: list, x: Multivector) -> Multivector:
    """Derivation extension D_A of a linear map A on generators.

    ``images[i]`` is A(g_i) as a grade-1 Multivector (or None for zero).
    D_A(x) = sum_i A(g_i) ^ (g_i* _| x).
    """
    out = Multivector.zero(x.rank)
    for i, img in enumerate(images):
        if img is None or img.is_zero():
            continue
        part = contract({i: 1}, x)
        if part:
            out = out + wedge(img, part)
    return out


def substitute(images: list, x: Multivector, new_rank: int | None = None) -> Multivector:
    """Functorial extension of a linear map on generators (multiplicative).

    ``images[i]`` is the image of g_i as a grade-1 Multivector of rank
    ``new_rank`` (defaults to x.rank).
    """
    rank = new_rank if new_rank is not None else x.rank
    cache: dict[int, Multivector] = {0: Multivector.scalar(rank)}

    def image_of(mask: int) -> Multivector:
        got = cache.get(mask)
        if got is not None:
            return got
        top = mask.bit_length() - 1
        rest = mask ^ (1 << top)
        val = wedge(image_of(rest), images[top])
        cache[mask] = val
        return val

    out: dict = {}
    for m, c in x.terms.items():
        for k, v in image_of(m).terms.items():
            w = out.get(k)
            val = v * c
            out[k] = val if w is None else w + val
    return Multivector(rank, {m: simplify(c) for m, c in out.items() if c}, _trusted=True)


def _even_positive(b: Multivector) -> bool:
    return all(m and m.bit_count() % 2 == 0 for m in b.terms)


def exp_truncated(b: Multivector) -> Multivector:
    """exp(b) for nilpotent b (no grade-0 part).

    For even b the monomials commute and square to zero, so
    exp(b) = prod_k (1 + c_k m_k), which is what we use.
    """
    if b.coeff(0):
        raise NonNilpotentOverflow("exp of a multivector with non-zero scalar part")
    if _even_positive(b):
        return times_exp(Multivector.scalar(b.rank), b)
    out = Multivector.scalar(b.rank)
    term = Multivector.scalar(b.rank)
    k = 0
    while True:
        k += 1
        term = wedge(term, b).scale(mpq(1, k))
        if term.is_zero():
            return out
        out = out + term
        if k > b.rank + 1:
            raise NonNilpotentOverflow("series did not terminate")


def times_exp(x: Multivector, b: Multivector, max_grade: int | None = None) -> Multivector:
    """x ^ exp(b) for b of even positive grades, optionally truncated at max_grade."""
    if not _even_positive(b):
        return wedge(x, exp_truncated(b)) if max_grade is None else wedge(x, exp_truncated(b)).upto(max_grade)
    cur = dict(x.terms) if max_grade is None else {m: c for m, c in x.terms.items() if m.bit_count() <= max_grade}
    for mb, cb in sorted(b.terms.items()):
        gb = mb.bit_count()
        pmask = _prefix_parity_mask(mb)
        add = []
        for ma, ca in cur.items():
            if ma & mb:
                continue
            if max_grade is not None and ma.bit_count() + gb > max_grade:
                continue
            c = ca * cb
            if (ma & pmask).bit_count() & 1:
                c = -c
            add.append((ma | mb, c))
        for m, c in add:
            v = cur.get(m)
            if v is None:
                cur[m] = c
            else:
                s = v + c
                if s:
                    cur[m] = s
                else:
                    del cur[m]
    return Multivector(x.rank, {m: simplify(c) for m, c in cur.items() if c}, _trusted=True)


def tau(x: Multivector) -> Multivector:
    """Multiply the degree-i part by (-1)^{i(i-1)/2}."""
    return x.grade_signs(lambda i: -1 if (i * (i - 1) // 2) % 2 else 1)


def top_form_coefficient(x: Multivector) -> object:
    return x.coeff((1 << x.rank) - 1)


# ---------------------------------------------------------------------------
# sparse exact linear algebra
# ---------------------------------------------------------------------------

def vec_add_scaled(target: dict, src: Mapping, k) -> None:
    """target += k * src, in place, dropping zeros."""
    for key, c in src.items():
        v = target.get(key)
        val = c * k
        if v is None:
            if val:
                target[key] = val
        else:
            s = v + val
            if s:
                target[key] = s
            else:
                del target[key]


def vec_galois(v: Mapping, s_t: int, s_q: int) -> dict:
    return {k: coeff_galois(c, s_t, s_q) for k, c in v.items()}


def as_vector(x) -> dict:
    if isinstance(x, Multivector):
        return dict(x.terms)
    if isinstance(x, Mapping):
        return {k: c for k, c in x.items() if c}
    return {i: c for i, c in enumerate(x) if c}


class Subspace:
    """Reduced row-echelon basis of a subspace of a coordinate space.

    Vectors are sparse dicts keyed by sortable coordinates. With
    ``track=True`` each row also records its expression in the generators
    that were inserted, which powers ``solve``.
    """

    def __init__(self, ambient: int | None = None, vectors: Iterable = (), track: bool = False):
        self.ambient = ambient
        self.rows: list[dict] = []
        self.pivots: list = []
        self.track = track
        self.combos: list[dict] = []
        self.ngens = 0
        for v in vectors:
            self.add(v)

    # -- core -------------------------------------------------------------
    def reduce(self, v, combo: dict | None = None) -> dict:
        vec = as_vector(v)
        for p, row, cmb in zip(self.pivots, self.rows, self.combos if self.track else [None] * len(self.rows)):
            c = vec.get(p)
            if c:
                vec_add_scaled(vec, row, -c)
                if combo is not None and cmb is not None:
                    vec_add_scaled(combo, cmb, -c)
        return vec

    def add(self, v) -> bool:
        """Insert a vector; return True iff the dimension grew."""
        combo = {self.ngens: ONE} if self.track else None
        self.ngens += 1
        vec = self.reduce(v, combo)
        if not vec:
            return False
        p = min(vec)
        inv = coeff_inv(vec[p])
        vec = {k: simplify(c * inv) for k, c in vec.items()}
        vec[p] = ONE
        if combo is not None:
            combo = {k: simplify(c * inv) for k, c in combo.items()}
        # keep the echelon fully reduced
        for idx, row in enumerate(self.rows):
            c = row.get(p)
            if c:
                vec_add_scaled(row, vec, -c)
                if self.track:
                    vec_add_scaled(self.combos[idx], combo, -c)
        self.rows.append(vec)
        self.pivots.append(p)
        if self.track:
            self.combos.append(combo)
        return True

    # -- queries ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.rows)

    def basis(self) -> list[dict]:
        return [dict(r) for r in self.rows]

    def member(self, v) -> bool:
        return not self.reduce(v)

    def contains(self, other: "Subspace") -> bool:
        return all(self.member(r) for r in other.rows)

    def equals(self, other: "Subspace") -> bool:
        return self.dim == other.dim and self.contains(other)

    def coordinates(self, v) -> list:
        """Coordinates of v in the echelon basis (v must be a member)."""
        vec = as_vector(v)
        coords = [vec.get(p, mpq(0)) for p in self.pivots]
        if self.reduce(vec):
            raise ValueError("vector is not in the subspace")
        return coords

    def solve(self, v) -> dict | None:
        """Express v in the inserted generators: {generator index: coefficient}."""
        if not self.track:
            raise ValueError("solve needs track=True")
        combo: dict = {}
        vec = self.reduce(v, combo)
        if vec:
            return None
        return {k: simplify(-c) for k, c in combo.items() if c}

    def sum(self, other: "Subspace") -> "Subspace":
        out = Subspace(self.ambient, self.rows)
        for r in other.rows:
            out.add(r)
        return out

    def intersect(self, other: "Subspace") -> "Subspace":
        """Intersection from the relations among the two echelon bases."""
        na = self.dim
        out = Subspace(self.ambient)
        for rel in kernel(self.rows + other.rows, self.ambient):
            v: dict = {}
            for idx, c in rel.items():
                if idx < na:
                    vec_add_scaled(v, self.rows[idx], c)
            if v:
                out.add(v)
        return out

    def galois(self, s_t: int, s_q: int) -> "Subspace":
        return Subspace(self.ambient, [vec_galois(r, s_t, s_q) for r in self.rows])

    def is_rational(self) -> bool:
        return all(not isinstance(c, TowerElt) for r in self.rows for c in r.values())

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def kernel(vectors: list, ambient: int | None = None) -> list[dict]:
    """Basis of {c : sum_i c_i v_i = 0} as dicts index -> coefficient."""
    sp = Subspace(ambient, track=True)
    rels = []
    for i, v in enumerate(vectors):
        before = sp.dim
        sp.add(v)
        if sp.dim == before:
            combo: dict = {i: ONE}
            sp.reduce(v, combo)
            rels.append({k: simplify(c) for k, c in combo.items() if c})
    return rels
