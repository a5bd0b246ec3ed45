"""Piecewise-linear concave test functions and the stability functionals.

For a datum ``d`` and a PL concave ``g`` on the translated polytope::

    L(g)   = int 2 g (a P - Q) dmu - int_boundary g P dsigma
    J(g)   = int (max g - g) P dmu
    L_s(g) = int (g K + (x . grad g) J) dmu

``L`` and ``L_s`` are computed along independent routes (linearity regions
and their boundary faces, versus the common refinement with the pyramids),
and agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import ratlat as rl
from .polyint import MultiPoly, integrate_affine_times
from .polytope import (
    LatticeChart,
    LatticePolytope,
    facet_simplex,
    linearity_subdivision,
    simplex_hrep,
)
from .spherical import DatumError, SphericalDatum


@dataclass(frozen=True)
class PLConcave:
    """``x -> min_j (slope_j(x) + constant_j)``; slopes in N-coordinates."""

    pieces: tuple

    def __post_init__(self):
        best: dict = {}
        for slope, c in self.pieces:
            slope = tuple(Fraction(v) for v in slope)
            c = Fraction(c)
            if slope not in best or c < best[slope]:
                best[slope] = c
        if not best:
            raise ValueError("PLConcave needs at least one affine piece")
        # keep first-seen order for stable region indices
        seen, ordered = set(), []
        for slope, _ in self.pieces:
            slope = tuple(Fraction(v) for v in slope)
            if slope not in seen:
                seen.add(slope)
                ordered.append((slope, best[slope]))
        object.__setattr__(self, "pieces", tuple(ordered))

    @classmethod
    def linear(cls, slope: Sequence, constant=0) -> "PLConcave":
        return cls(((tuple(slope), constant),))

    @classmethod
    def constant(cls, c, r: int) -> "PLConcave":
        return cls((((0,) * r, c),))

    @property
    def rank(self) -> int:
        return len(self.pieces[0][0])

    def is_affine(self) -> bool:
        return len(self.pieces) == 1

    def ambient_pieces(self, chart: LatticeChart) -> list[tuple[tuple, Fraction]]:
        return [(chart.functional_from_n(s), c) for s, c in self.pieces]

    def value(self, x: Sequence, chart: LatticeChart) -> Fraction:
        return min(rl.dot(a, x) + c for a, c in self.ambient_pieces(chart))

    def shifted(self, c) -> "PLConcave":
        return PLConcave(tuple((s, k + Fraction(c)) for s, k in self.pieces))

    def scaled(self, k) -> "PLConcave":
        k = Fraction(k)
        if k <= 0:
            raise ValueError("only positive scaling preserves concavity")
        return PLConcave(tuple((tuple(k * v for v in s), k * c) for s, c in self.pieces))

    def check_test_configuration(self, d: SphericalDatum) -> None:
        """Slopes must lie in the valuation cone and ``g`` must be positive."""
        for s, _ in self.pieces:
            if not d.cone.contains(s):
                raise DatumError(f"slope {tuple(map(str, s))} is not in the valuation cone")
        if min_value(d, self) <= 0:
            raise DatumError("test-configuration functions must be positive on the polytope")


@dataclass(frozen=True)
class Barycenter:
    point: tuple
    mass: Fraction


@dataclass(frozen=True)
class Cell:
    """Part of the common refinement: region ``piece`` inside pyramid ``facet``."""

    piece: int
    facet: int
    simplices: tuple


# -- geometry helpers -----------------------------------------------------------


@lru_cache(maxsize=64)
def _regions(d: SphericalDatum, g: PLConcave):
    return tuple(linearity_subdivision(d.delta, g))


def subdivision_vertices(d: SphericalDatum, g: PLConcave) -> list[tuple]:
    pts = set()
    for _, region in _regions(d, g):
        pts.update(region.vertices)
    return sorted(pts)


def max_value(d: SphericalDatum, g: PLConcave) -> Fraction:
    return max(g.value(v, d.chart) for v in subdivision_vertices(d, g))


def min_value(d: SphericalDatum, g: PLConcave) -> Fraction:
    # a concave function attains its minimum at a vertex of the polytope
    return min(g.value(v, d.chart) for v in d.delta.vertices)


@lru_cache(maxsize=64)
def refinement(d: SphericalDatum, g: PLConcave) -> tuple[Cell, ...]:
    """Common refinement of the linearity regions with the pyramid cells."""
    pieces = g.ambient_pieces(d.chart)
    if len(pieces) == 1:
        return tuple(Cell(0, i, cells) for i, cells in d.pyramids)
    out = []
    for j, (sj, cj) in enumerate(pieces):
        extra = []
        for k, (sk, ck) in enumerate(pieces):
            if k != j:
                extra.append((rl.sub(sj, sk), ck - cj))
        for i, cells in d.pyramids:
            kept = []
            for s in cells:
                vals = [[rl.dot(a, v) - c for v in s.vertices] for a, c in extra]
                if all(x <= 0 for row in vals for x in row):
                    kept.append(s)
                    continue
                if any(all(x >= 0 for x in row) and any(x > 0 for x in row) for row in vals):
                    continue
                piece = LatticePolytope(
                    d.chart, tuple(simplex_hrep(s.vertices)) + tuple(extra), known_bounded=True
                )
                if piece.is_full_dimensional():
                    kept.extend(piece.triangulate())
            if kept:
                out.append(Cell(j, i, tuple(kept)))
    return tuple(out)


# -- functionals ----------------------------------------------------------------


def functional_L(d: SphericalDatum, g: PLConcave) -> Fraction:
    """Boundary form of the Futaki-type functional."""
    weight = d.P * d.two_a - d.Q * 2
    pieces = g.ambient_pieces(d.chart)
    r = d.rank
    interior = Fraction(0)
    boundary = Fraction(0)
    normals = {i: d.delta.primitive_normal(i)[0] for i in d.delta.facet_indices}
    for j, region in _regions(d, g):
        a, c = pieces[j]
        interior += integrate_affine_times(a, c, weight, region.triangulate())
        for i, u in normals.items():
            face = region.face_vertices(i)
            if rl.affine_rank([region.vertices[k] for k in face]) != r - 1:
                continue
            cells = [
                facet_simplex([region.vertices[k] for k in t], u, d.chart)
                for t in region.triangulate_face(face)
            ]
            boundary += integrate_affine_times(a, c, d.P, cells)
    return interior * d.chart.mu_factor - boundary


def functional_J(d: SphericalDatum, g: PLConcave) -> Fraction:
    pieces = g.ambient_pieces(d.chart)
    gP = Fraction(0)
    for j, region in _regions(d, g):
        a, c = pieces[j]
        gP += integrate_affine_times(a, c, d.P, region.triangulate())
    return max_value(d, g) * d.V - gP * d.chart.mu_factor


def functional_L_smooth(d: SphericalDatum, g: PLConcave) -> Fraction:
    """Interior form ``int (g K + (x . grad g) J) dmu`` on the refinement."""
    pieces = g.ambient_pieces(d.chart)
    K, J = d.K, d.J
    total = Fraction(0)
    for cell in refinement(d, g):
        a, c = pieces[cell.piece]
        total += integrate_affine_times(a, c, K.piece(cell.facet), cell.simplices)
        total += integrate_affine_times(a, 0, J.piece(cell.facet), cell.simplices)
    return total * d.chart.mu_factor


def mabuchi_na(d: SphericalDatum, g: PLConcave) -> Fraction:
    return functional_L(d, g) / (2 * d.V)


def j_na(d: SphericalDatum, g: PLConcave) -> Fraction:
    return functional_J(d, g) / d.V


def barycenter(d: SphericalDatum) -> Barycenter:
    """Barycenter of the polytope against ``(K + J) dmu``."""
    kj = d.K + d.J
    mass = kj.integral()
    if mass == 0:
        raise DatumError("K + J has zero mass; barycenter undefined")
    r = d.rank
    point = tuple(kj.integral(MultiPoly.var(r, k)) / mass for k in range(r))
    return Barycenter(point, mass)


def supergradient_piece(d: SphericalDatum, g: PLConcave, x: Sequence) -> int:
    """Index of a piece attaining the minimum at ``x`` (lowest index on ties)."""
    vals = [rl.dot(a, x) + c for a, c in g.ambient_pieces(d.chart)]
    return vals.index(min(vals))


def decomposition_terms(d: SphericalDatum, g: PLConcave, bary: Barycenter | None = None) -> tuple:
    """The five integrals whose sum is ``L_s(g)``, around the barycenter ``b``:

    1. ``(d_x g (x - b) - g(x) + g(b)) J``
    2. ``(g(x) - g(b) - d_b g (x - b)) (K + J)``
    3. ``d_x g (b) J``
    4. ``g(b) K``
    5. ``d_b g (x - b) (K + J)``
    """
    if bary is None:
        bary = barycenter(d)
    b = bary.point
    pieces = g.ambient_pieces(d.chart)
    gb = g.value(b, d.chart)
    slope_b = pieces[supergradient_piece(d, g, b)][0]
    shift_b = -rl.dot(slope_b, b)      # d_b g (x - b) = slope_b . x + shift_b
    K, J = d.K, d.J
    terms = [Fraction(0)] * 5
    zero = (Fraction(0),) * d.rank
    for cell in refinement(d, g):
        sj, cj = pieces[cell.piece]
        Ki, Ji = K.piece(cell.facet), J.piece(cell.facet)
        cs = cell.simplices
        intK = integrate_affine_times(zero, 1, Ki, cs)
        intJ = integrate_affine_times(zero, 1, Ji, cs)
        gj_b = rl.dot(sj, b) + cj
        defect = (rl.sub(sj, slope_b), cj - gb - shift_b)
        terms[0] += (gb - gj_b) * intJ
        terms[1] += integrate_affine_times(*defect, Ki, cs) + integrate_affine_times(*defect, Ji, cs)
        terms[2] += rl.dot(sj, b) * intJ
        terms[3] += gb * intK
        terms[4] += integrate_affine_times(slope_b, shift_b, Ki, cs) + integrate_affine_times(
            slope_b, shift_b, Ji, cs
        )
    mu = d.chart.mu_factor
    return tuple(t * mu for t in terms)


# -- twisting -------------------------------------------------------------------


def twist(g: PLConcave, l: Sequence, cone=None) -> PLConcave:
    """``g + l`` for ``l`` in ``Lin(V)`` (N-coordinates)."""
    l = tuple(Fraction(v) for v in l)
    if cone is not None and any(v != 0 for v in l) and not cone.in_lin(l):
        raise DatumError("twist direction is not in Lin(V)")
    return PLConcave(tuple((rl.add(s, l), c) for s, c in g.pieces))


@dataclass(frozen=True)
class TwistSearch:
    value: Fraction
    twist: tuple               # minimizing l found, N-coordinates
    bracket_width: Fraction    # final bracket width along the last coordinate searched
    value_bound: Fraction      # certified |value - 1-D infimum| bound of the last sweep
    sweeps: int
    converged: bool


class SearchError(RuntimeError):
    pass


def _fibonacci_search(f, lo: Fraction, hi: Fraction, width: Fraction):
    """Minimize a convex ``f`` on ``[lo, hi]`` with exact rational probes."""
    fib = [1, 1]
    while Fraction(fib[-1]) * width < 4 * (hi - lo):
        fib.append(fib[-1] + fib[-2])
    n = len(fib) - 1
    best_t, best_v = lo, f(lo)
    hv = f(hi)
    if hv < best_v:
        best_t, best_v = hi, hv
    if n < 2:
        return best_t, best_v, lo, hi
    a, b = lo, hi
    x1 = a + Fraction(fib[n - 2], fib[n]) * (b - a)
    x2 = a + Fraction(fib[n - 1], fib[n]) * (b - a)
    f1, f2 = f(x1), f(x2)
    for t, v in ((x1, f1), (x2, f2)):
        if v < best_v:
            best_t, best_v = t, v
    while b - a > width and x1 < x2:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = a + b - x2
            f1 = f(x1)
            t, v = x1, f1
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + b - x1
            f2 = f(x2)
            t, v = x2, f2
        if x1 > x2:
            x1, x2, f1, f2 = x2, x1, f2, f1
        if v < best_v:
            best_t, best_v = t, v
    return best_t, best_v, a, b


def twist_reduced_jna(
    d: SphericalDatum, g: PLConcave, tol, max_sweeps: int = 50, max_expand: int = 64
) -> TwistSearch:
    """``inf_{l in Lin(V)} JNA(g + l)`` by cyclic golden-section (Fibonacci) search.

    Along each coordinate the result is certified: ``JNA`` is convex and
    Lipschitz in the twist with constant at most ``2 max_vertices |l|``, so a
    bracket of width ``w`` bounds the 1-D error by ``Lip * w <= tol``.
    """
    tol = Fraction(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    lin = d.cone.lin_basis
    if not lin:
        return TwistSearch(j_na(d, g), (Fraction(0),) * d.rank, Fraction(0), Fraction(0), 0, True)
    t = [Fraction(0)] * len(lin)

    def point(coords):
        l = [Fraction(0)] * d.rank
        for c, v in zip(coords, lin):
            for k in range(d.rank):
                l[k] += c * v[k]
        return tuple(l)

    cache: dict = {}

    def F(coords):
        key = tuple(coords)
        if key not in cache:
            cache[key] = j_na(d, twist(g, point(coords)))
        return cache[key]

    lips = []
    for v in lin:
        a = d.chart.functional_from_n(v)
        lips.append(2 * max(abs(rl.dot(a, x)) for x in d.delta.vertices))

    current = F(t)
    width = Fraction(0)
    bound = Fraction(0)
    for sweep in range(1, max_sweeps + 1):
        start = current
        for k in range(len(lin)):
            def f1(x, k=k):
                c = list(t)
                c[k] = x
                return F(c)

            R = Fraction(1)
            base = f1(t[k])
            for _ in range(max_expand):
                if f1(t[k] + R) >= base and f1(t[k] - R) >= base:
                    break
                R *= 2
            else:
                raise SearchError("could not bracket the twist minimizer")
            w = tol / lips[k] if lips[k] else Fraction(1)
            x, v, lo, hi = _fibonacci_search(f1, t[k] - R, t[k] + R, w)
            t[k] = x
            current = v
            width = hi - lo
            bound = lips[k] * width
        if len(lin) == 1 or start - current <= tol:
            return TwistSearch(current, point(t), width, bound, sweep, True)
    return TwistSearch(current, point(t), width, bound, max_sweeps, False)
