"""Small dense exact matrices (lists of rows) over Q or the tower field."""

from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from .errors import DivisionByZero
from .fieldtower import ONE, ZERO, TowerElt, coeff_galois, coeff_inv, simplify

Matrix = list  # list[list[coeff]]


def zeros(r: int, c: int | None = None) -> Matrix:
    return [[ZERO] * (r if c is None else c) for _ in range(r)]


def identity(n: int) -> Matrix:
    m = zeros(n)
    for i in range(n):
        m[i][i] = ONE
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    out = []
    for row in a:
        nz = [(k, x) for k, x in enumerate(row) if x]
        out.append([simplify(_dot_nz(nz, col)) for col in cols])
    return out


def _dot_nz(nz, col):
    s = ZERO
    for k, x in nz:
        y = col[k]
        if y:
            s = s + x * y
    return s


def matvec(a: Matrix, v: Sequence) -> list:
    nzv = [(k, x) for k, x in enumerate(v) if x]
    out = []
    for row in a:
        s = ZERO
        for k, x in nzv:
            y = row[k]
            if y:
                s = s + y * x
        out.append(simplify(s))
    return out


def add(a: Matrix, b: Matrix) -> Matrix:
    return [[simplify(x + y) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def sub(a: Matrix, b: Matrix) -> Matrix:
    return [[simplify(x - y) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def scale(a: Matrix, k) -> Matrix:
    return [[simplify(x * k) for x in row] for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(r) for r in zip(*a)]


def is_zero(a: Matrix) -> bool:
    return all(not x for row in a for x in row)


def equal(a: Matrix, b: Matrix) -> bool:
    return is_zero(sub(a, b))


def is_rational(a: Matrix) -> bool:
    return all(not isinstance(x, TowerElt) for row in a for x in row)


def galois(a: Matrix, s_t: int, s_q: int) -> Matrix:
    return [[coeff_galois(x, s_t, s_q) for x in row] for row in a]


def dot(u: Sequence, v: Sequence):
    s = ZERO
    for x, y in zip(u, v):
        if x and y:
            s = s + x * y
    return simplify(s)


def bilinear(gram: Matrix, x: Sequence, y: Sequence):
    return dot(x, matvec(gram, y))


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise DivisionByZero("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = coeff_inv(aug[col][col])
        aug[col] = [simplify(x * inv) for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                k = aug[r][col]
                aug[r] = [simplify(x - k * y) for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def det(a: Matrix):
    n = len(a)
    m = [list(r) for r in a]
    out = ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            return ZERO
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            out = -out
        p = m[col][col]
        out = simplify(out * p)
        inv = coeff_inv(p)
        for r in range(col + 1, n):
            if m[r][col]:
                k = m[r][col] * inv
                m[r] = [simplify(x - k * y) for x, y in zip(m[r], m[col])]
    return out


def charpoly(a: Matrix) -> list:
    """Coefficients c_0..c_n of det(x I - a) via Faddeev-LeVerrier."""
    n = len(a)
    coeffs = [ZERO] * (n + 1)
    coeffs[n] = ONE
    m = zeros(n)
    for k in range(1, n + 1):
        am = matmul(a, m)
        m = add(am, scale(identity(n), coeffs[n - k + 1]))
        am = matmul(a, m)
        tr = ZERO
        for i in range(n):
            tr = tr + am[i][i]
        coeffs[n - k] = simplify(-tr * mpq(1, k))
    return coeffs


def trace(a: Matrix):
    s = ZERO
    for i in range(len(a)):
        s = s + a[i][i]
    return simplify(s)


def block(blocks: list[list[Matrix]]) -> Matrix:
    out = []
    for brow in blocks:
        for r in range(len(brow[0])):
            row = []
            for b in brow:
                row.extend(b[r])
            out.append(row)
    return out


def direct_sum(*mats: Matrix) -> Matrix:
    n = sum(len(m) for m in mats)
    out = zeros(n)
    off = 0
    for m in mats:
        for i, row in enumerate(m):
            for j, x in enumerate(row):
                out[off + i][off + j] = x
        off += len(m)
    return out


def nullspace(a: Matrix) -> list[list]:
    """Basis of {x : a x = 0}."""
    rows = [list(r) for r in a]
    ncols = len(a[0]) if a else 0
    pivcols = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = coeff_inv(rows[r][col])
        rows[r] = [simplify(x * inv) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                k = rows[i][col]
                rows[i] = [simplify(x - k * y) for x, y in zip(rows[i], rows[r])]
        pivcols.append(col)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivcols]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for i, pc in enumerate(pivcols):
            v[pc] = simplify(-rows[i][f])
        basis.append(v)
    return basis


def symmetric_pivots(g: Matrix) -> list | None:
    """Pivots of symmetric Gaussian elimination without pivoting (LDL^T).

    Returns None when a zero pivot appears before the end.
    """
    n = len(g)
    m = [list(r) for r in g]
    pivots = []
    for k in range(n):
        p = m[k][k]
        if not p:
            return None
        pivots.append(p)
        inv = coeff_inv(p)
        for i in range(k + 1, n):
            if m[i][k]:
                f = m[i][k] * inv
                m[i] = [simplify(x - f * y) for x, y in zip(m[i], m[k])]
    return pivots
