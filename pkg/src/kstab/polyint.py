"""Sparse rational polynomials and exact integration over simplices.

Integration uses the barycentric monomial identity on a k-simplex ``s``::

    int_s lambda^a = vol(s) * k! * prod(a_i!) / (k + |a|)!

after pulling the polynomial back along the barycentric parametrization.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping, Sequence

from . import ratlat as rl
from .polytope import (
    Facet,
    GeometryError,
    LatticeChart,
    LatticePolytope,
    Simplex,
)


class MultiPoly:
    """Polynomial in ``nvars`` variables: ``{exponent tuple: Fraction}``."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping | None = None):
        self.nvars = nvars
        clean = {}
        for e, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                e = tuple(e)
                if len(e) != nvars:
                    raise ValueError("exponent length does not match nvars")
                clean[e] = clean.get(e, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self._hash = None

    # constructors
    @classmethod
    def const(cls, nvars: int, c) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def affine(cls, coeffs: Sequence, const=0) -> "MultiPoly":
        """``coeffs . x + const``."""
        n = len(coeffs)
        terms = {(0,) * n: const}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
        return cls(n, terms)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return MultiPoly.const(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return MultiPoly(self.nvars, t)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            c = Fraction(other)
            return MultiPoly(self.nvars, {e: c * v for e, v in self.terms.items()})
        other = self._coerce(other)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = MultiPoly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        return self == MultiPoly.const(self.nvars, other)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(
                f"x{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k
            )
            parts.append(rl.format_rational(c) + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, x: Sequence):
        x = [Fraction(v) for v in x]
        total = Fraction(0)
        for e, c in self.terms.items():
            m = c
            for xi, k in zip(x, e):
                if k:
                    m *= xi ** k
            total += m
        return total


@dataclass(frozen=True)
class AffineMap:
    """``t -> matrix t + translation``; matrix is codomain x domain."""

    matrix: tuple
    translation: tuple

    @property
    def domain_dim(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    @property
    def codomain_dim(self) -> int:
        return len(self.translation)


def compose_affine(p: MultiPoly, a: AffineMap) -> MultiPoly:
    """The polynomial ``t -> p(a(t))``."""
    if a.codomain_dim != p.nvars or len(a.matrix) != p.nvars:
        raise ValueError("dimension mismatch in compose_affine")
    m = a.domain_dim
    images = [MultiPoly.affine(row, t) for row, t in zip(a.matrix, a.translation)]
    powers: dict = {}

    def power(i, k):
        if (i, k) not in powers:
            powers[(i, k)] = images[i] ** k if k else MultiPoly.const(m, 1)
        return powers[(i, k)]

    out = MultiPoly(m)
    for e, c in p.terms.items():
        term = MultiPoly.const(m, c)
        for i, k in enumerate(e):
            if k:
                term = term * power(i, k)
        out = out + term
    return out


def barycentric_pullback(p: MultiPoly, vertices: Sequence[Sequence]) -> MultiPoly:
    """``p(sum_i lambda_i v_i)`` as a polynomial in ``lambda_0..lambda_k``."""
    cols = [rl.vec(v) for v in vertices]
    matrix = tuple(tuple(v[i] for v in cols) for i in range(p.nvars))
    return compose_affine(p, AffineMap(matrix, (Fraction(0),) * p.nvars))


def _monomial_average(e: Sequence[int]) -> Fraction:
    k = len(e) - 1
    num = factorial(k)
    for a in e:
        num *= factorial(a)
    return Fraction(num, factorial(k + sum(e)))


def integrate_simplex(p: MultiPoly, s: Simplex) -> Fraction:
    """Exact integral of ``p`` over ``s`` against the simplex's own measure."""
    if s.volume <= 0:
        raise GeometryError("degenerate simplex")
    if len(s.vertices[0]) != p.nvars:
        raise ValueError("simplex and polynomial live in different dimensions")
    q = barycentric_pullback(p, s.vertices)
    return s.volume * sum((c * _monomial_average(e) for e, c in q.terms.items()), Fraction(0))


@lru_cache(maxsize=4096)
def simplex_moments(p: MultiPoly, s: Simplex) -> tuple:
    """``(int lambda_0 p, ..., int lambda_k p)`` over ``s``.

    For affine ``f``, ``int f p = sum_i f(v_i) * moment_i``.
    """
    if s.volume <= 0:
        raise GeometryError("degenerate simplex")
    q = barycentric_pullback(p, s.vertices)
    k = len(s.vertices) - 1
    out = [Fraction(0)] * (k + 1)
    for e, c in q.terms.items():
        num = factorial(k)
        for a in e:
            num *= factorial(a)
        base = c * Fraction(num, factorial(k + sum(e) + 1))
        for i in range(k + 1):
            out[i] += base * (e[i] + 1)
    return tuple(m * s.volume for m in out)


def integrate_affine_times(coeffs: Sequence, const, p: MultiPoly, cells: Iterable[Simplex]) -> Fraction:
    """``int (coeffs . x + const) p`` over the cells, via :func:`simplex_moments`."""
    total = Fraction(0)
    for s in cells:
        for v, m in zip(s.vertices, simplex_moments(p, s)):
            if m:
                total += (rl.dot(coeffs, v) + const) * m
    return total


def integrate_cells(p: MultiPoly, cells: Iterable[Simplex]) -> Fraction:
    return sum((integrate_simplex(p, s) for s in cells), Fraction(0))


def integrate_polytope(p: MultiPoly, poly: LatticePolytope) -> Fraction:
    """``int_poly p dmu`` with ``dmu`` normalized by the chart lattice."""
    return integrate_cells(p, poly.triangulate()) * poly.chart.mu_factor


def integrate_facet(p: MultiPoly, f: Facet, chart: LatticeChart | None = None) -> Fraction:
    """``int_f p dsigma``; facet simplices already carry dsigma volumes."""
    if chart is not None and any(len(s.vertices) != chart.ambient_dim for s in f.simplices):
        raise GeometryError("facet of wrong dimension")
    return integrate_cells(p, f.simplices)


def gradient(p: MultiPoly) -> list[MultiPoly]:
    out = []
    for i in range(p.nvars):
        t = {}
        for e, c in p.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                t[tuple(e2)] = c * e[i]
        out.append(MultiPoly(p.nvars, t))
    return out


def euler_derivative(p: MultiPoly) -> MultiPoly:
    """``sum_k x_k dp/dx_k``: scales each monomial by its degree."""
    return MultiPoly(p.nvars, {e: c * sum(e) for e, c in p.terms.items()})


# -- Bernstein form ---------------------------------------------------------


def bernstein_indices(k: int, d: int) -> list[tuple[int, ...]]:
    """Multi-indices ``a`` of length ``k+1`` with ``|a| = d``, lexicographic."""
    return [a for a in product(range(d, -1, -1), repeat=k + 1) if sum(a) == d]


def bernstein_coefficients(p: MultiPoly, s: Simplex, d: int | None = None) -> list[Fraction]:
    """Coefficients of ``p`` in the degree-``d`` Bernstein basis on ``s``,
    ordered as :func:`bernstein_indices`."""
    if d is None:
        d = p.degree()
    if d < p.degree():
        raise ValueError("Bernstein degree below polynomial degree")
    k = len(s.vertices) - 1
    q = barycentric_pullback(p, s.vertices)
    ones = MultiPoly.affine([1] * (k + 1))
    homog = MultiPoly(k + 1)
    cache: dict = {}
    for e, c in q.terms.items():
        lift = d - sum(e)
        if lift not in cache:
            cache[lift] = ones ** lift
        mono = MultiPoly(k + 1, {e: c})
        homog = homog + mono * cache[lift]
    out = []
    for a in bernstein_indices(k, d):
        multinom = factorial(d)
        for ai in a:
            multinom //= factorial(ai)
        out.append(homog.terms.get(a, Fraction(0)) / multinom)
    return out
