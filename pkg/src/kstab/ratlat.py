"""Exact rational linear algebra and integer lattice normal forms.

Vectors are tuples of :class:`fractions.Fraction` (or ``int`` for lattice
vectors), matrices are tuples of row tuples. Nothing here touches floats.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

Vector = tuple
Matrix = tuple

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or a Python int into a Fraction.

    Raises ValueError on malformed input or a zero denominator.
    """
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ValueError(f"not a rational: {text!r}")
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def vec(*entries) -> Vector:
    if len(entries) == 1 and not isinstance(entries[0], (int, Fraction, str)):
        entries = tuple(entries[0])
    return tuple(parse_rational(e) if isinstance(e, str) else Fraction(e) for e in entries)


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def add(u: Sequence, v: Sequence) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Sequence, v: Sequence) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def scale(c, u: Sequence) -> Vector:
    return tuple(c * a for a in u)


def transpose(m: Sequence[Sequence]) -> Matrix:
    return tuple(zip(*m))


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), 0) for col in bt) for row in a)


def matvec(m: Sequence[Sequence], v: Sequence) -> Vector:
    return tuple(dot(row, v) for row in m)


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def _echelon(rows):
    """Row-reduce a copy of ``rows`` over Q. Returns (reduced rows, pivot columns)."""
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(_echelon(rows)[1])


def det(m: Sequence[Sequence]) -> Fraction:
    n = len(m)
    a = [list(map(Fraction, r)) for r in m]
    d = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            d = -d
        d *= a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] / a[c][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return d


def solve(a: Sequence[Sequence], b: Sequence):
    """Solve the square system ``a x = b``; returns None when singular."""
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    for c in range(n):
        p = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if p is None:
            return None
        aug[c], aug[p] = aug[p], aug[c]
        piv = aug[c][c]
        for i in range(c + 1, n):
            if aug[i][c] != 0:
                f = aug[i][c] / piv
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = aug[i][n] - sum((aug[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        x[i] = s / aug[i][i]
    return tuple(x)


def inverse(m: Sequence[Sequence]) -> Matrix:
    n = len(m)
    cols = []
    for j in range(n):
        e = [Fraction(int(i == j)) for i in range(n)]
        x = solve(m, e)
        if x is None:
            raise ZeroDivisionError("singular matrix")
        cols.append(x)
    return transpose(cols)


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> list[Vector]:
    """Rational basis of ``{v : rows v = 0}``."""
    if ncols is None:
        ncols = len(rows[0])
    if not rows:
        return [tuple(Fraction(int(i == j)) for i in range(ncols)) for j in range(ncols)]
    m, pivots = _echelon(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][f]
        basis.append(tuple(v))
    return basis


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull of ``points`` (-1 for no points)."""
    if not points:
        return -1
    p0 = points[0]
    return rank([sub(p, p0) for p in points[1:]]) if len(points) > 1 else 0


# -- integer lattices -------------------------------------------------------


def hnf(m: Sequence[Sequence[int]]):
    """Row Hermite normal form with the unimodular transform.

    Returns ``(h, u)`` with ``h = u m``, ``det(u) = +-1``, pivots positive,
    entries above each pivot reduced into ``[0, pivot)`` and zero rows last.
    """
    if not m:
        raise ValueError("hnf needs at least one row")
    nrows, ncols = len(m), len(m[0])
    h = [[int(x) for x in row] for row in m]
    u = [[int(i == j) for j in range(nrows)] for i in range(nrows)]

    def swap(i, j):
        h[i], h[j] = h[j], h[i]
        u[i], u[j] = u[j], u[i]

    def addrow(dst, src, f):
        # row_dst += f * row_src
        h[dst] = [a + f * b for a, b in zip(h[dst], h[src])]
        u[dst] = [a + f * b for a, b in zip(u[dst], u[src])]

    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        # Euclid down column c among rows r..end
        while True:
            nz = [i for i in range(r, nrows) if h[i][c] != 0]
            if not nz:
                break
            p = min(nz, key=lambda i: abs(h[i][c]))
            if p != r:
                swap(p, r)
            done = True
            for i in range(r + 1, nrows):
                if h[i][c] != 0:
                    addrow(i, r, -(h[i][c] // h[r][c]))
                    if h[i][c] != 0:
                        done = False
            if done:
                break
        if h[r][c] == 0:
            continue
        if h[r][c] < 0:
            h[r] = [-a for a in h[r]]
            u[r] = [-a for a in u[r]]
        for i in range(r):
            addrow(i, r, -(h[i][c] // h[r][c]))
        r += 1
    return tuple(map(tuple, h)), tuple(map(tuple, u))


def primitive_part(v: Sequence) -> tuple[int, ...]:
    """Integer vector on the ray through ``v`` with coprime entries."""
    q = [Fraction(x) for x in v]
    if all(x == 0 for x in q):
        raise ValueError("primitive_part of the zero vector")
    den = lcm(*(x.denominator for x in q))
    ints = [int(x * den) for x in q]
    g = 0
    for x in ints:
        g = gcd(g, x)
    return tuple(x // g for x in ints)


def kernel_lattice_basis(u: Sequence[int]) -> list[tuple[int, ...]]:
    """A Z-basis of ``{v in Z^n : u . v = 0}`` (``n - 1`` vectors)."""
    u = [int(x) for x in u]
    if all(x == 0 for x in u):
        raise ValueError("kernel_lattice_basis of the zero vector")
    # column HNF of the 1 x n matrix u: u U = (g, 0, ..., 0); the last n-1
    # columns of U span the integral kernel.
    _, t = hnf([[x] for x in u])
    # t (n x n) satisfies t @ u^T = (g, 0, ...)^T, so rows 1.. of t are kernel vectors
    return [tuple(row) for row in t[1:]]
