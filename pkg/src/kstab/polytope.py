"""Exact convex polytopes in a lattice chart.

A :class:`LatticePolytope` is an H-representation ``{x : a_i . x <= c_i}``
written in ambient coordinates, together with the chart that says which
lattice ``M`` the ambient coordinates carry. The chart fixes both the volume
normalization of ``dmu`` and, via primitive normals, the facet offsets
``n_i`` and the facet measures ``dsigma``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import factorial
from typing import Sequence

from . import ratlat as rl


class GeometryError(ValueError):
    """Raised for empty, unbounded or lower-dimensional input."""


@dataclass(frozen=True)
class LatticeChart:
    """Basis of ``M`` written in ambient coordinates (one vector per row)."""

    basis: tuple

    def __post_init__(self):
        b = tuple(rl.vec(v) for v in self.basis)
        object.__setattr__(self, "basis", b)
        if any(len(v) != len(b) for v in b):
            raise GeometryError("lattice basis must be square")
        if rl.det(b) == 0:
            raise GeometryError("lattice basis vectors are linearly dependent")

    @classmethod
    def standard(cls, r: int) -> "LatticeChart":
        return cls(rl.identity(r))

    @property
    def ambient_dim(self) -> int:
        return len(self.basis)

    @cached_property
    def covolume(self) -> Fraction:
        return abs(rl.det(self.basis))

    @property
    def mu_factor(self) -> Fraction:
        """Density of ``dmu`` against ambient Lebesgue measure."""
        return 1 / self.covolume

    def functional_to_m(self, a: Sequence) -> tuple:
        """Values of the ambient functional ``a`` on the basis of M."""
        return tuple(rl.dot(a, e) for e in self.basis)

    def functional_from_n(self, c: Sequence) -> tuple:
        """Ambient functional with N-coordinates ``c`` (dual basis of M)."""
        x = rl.solve(self.basis, [Fraction(v) for v in c])
        return x

    def point_to_m(self, p: Sequence) -> tuple:
        return rl.solve(rl.transpose(self.basis), p)

    def point_from_m(self, m: Sequence) -> tuple:
        return rl.matvec(rl.transpose(self.basis), m)


@dataclass(frozen=True)
class Simplex:
    """Vertices plus the measure of the simplex in whatever normalization
    its producer chose (ambient Lebesgue for cells, dsigma for facet cells)."""

    vertices: tuple
    volume: Fraction

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


def euclidean_simplex(vertices: Sequence[Sequence]) -> Simplex:
    vs = tuple(rl.vec(v) for v in vertices)
    k = len(vs) - 1
    if k == 0:
        return Simplex(vs, Fraction(1))
    edges = [rl.sub(v, vs[0]) for v in vs[1:]]
    if k != len(vs[0]):
        raise GeometryError("euclidean_simplex needs a full-dimensional simplex")
    vol = abs(rl.det(edges)) / factorial(k)
    if vol == 0:
        raise GeometryError("degenerate simplex")
    return Simplex(vs, vol)


def simplex_hrep(vertices: Sequence[Sequence]) -> list[tuple[tuple, Fraction]]:
    """Inequalities ``a . x <= c`` of a full-dimensional simplex."""
    vs = [rl.vec(v) for v in vertices]
    r = len(vs[0])
    out = []
    for i, vi in enumerate(vs):
        others = vs[:i] + vs[i + 1:]
        rows = [rl.sub(p, others[0]) for p in others[1:]]
        normal = rl.nullspace(rows, r)[0] if rows else (Fraction(1),)
        c = rl.dot(normal, others[0])
        if rl.dot(normal, vi) > c:
            normal, c = rl.scale(-1, normal), -c
        out.append((normal, c))
    return out


@dataclass(frozen=True)
class Facet:
    index: int
    normal: tuple          # primitive, in M-coordinates (an element of N)
    offset: Fraction       # n_i, with normal(x) <= n_i on the polytope
    vertices: tuple
    simplices: tuple       # (r-1)-simplices carrying dsigma volumes


@dataclass(frozen=True, eq=False)
class LatticePolytope:
    chart: LatticeChart
    inequalities: tuple = field(repr=False)
    # set when the caller knows the system is bounded (e.g. a cut of a bounded polytope)
    known_bounded: bool = field(default=False, repr=False)

    def __post_init__(self):
        ineqs = tuple((rl.vec(a), Fraction(c)) for a, c in self.inequalities)
        object.__setattr__(self, "inequalities", ineqs)
        r = self.chart.ambient_dim
        if any(len(a) != r for a, _ in ineqs):
            raise GeometryError("inequality normal has wrong dimension")

    @property
    def dim(self) -> int:
        return self.chart.ambient_dim

    # -- vertices -----------------------------------------------------------

    @cached_property
    def _vertex_data(self):
        verts, tight = _enumerate_vertices(self.inequalities, self.dim)
        return verts, tight

    @cached_property
    def vertices(self) -> tuple:
        verts = self._vertex_data[0]
        if not verts:
            raise GeometryError("empty polytope")
        if rl.affine_rank(verts) < self.dim:
            raise GeometryError("polytope has empty interior")
        if not self._bounded:
            raise GeometryError("unbounded inequality system")
        return verts

    @cached_property
    def _bounded(self) -> bool:
        return self.known_bounded or _is_bounded(self.inequalities, self.dim)

    def is_full_dimensional(self) -> bool:
        verts = self._vertex_data[0]
        return bool(verts) and rl.affine_rank(verts) == self.dim and self._bounded

    @cached_property
    def tight_sets(self) -> tuple:
        self.vertices
        return self._vertex_data[1]

    def contains(self, x: Sequence, strict: bool = False) -> bool:
        if strict:
            return all(rl.dot(a, x) < c for a, c in self.inequalities)
        return all(rl.dot(a, x) <= c for a, c in self.inequalities)

    # -- faces --------------------------------------------------------------

    @cached_property
    def facet_indices(self) -> tuple:
        """Indices of inequalities that cut out a facet (others are redundant).

        Repeated inequalities for the same facet keep only the first index.
        """
        verts = self.vertices
        out, seen = [], set()
        for i in range(len(self.inequalities)):
            face = self.face_vertices(i)
            if face in seen:
                continue
            if rl.affine_rank([verts[k] for k in face]) == self.dim - 1:
                seen.add(face)
                out.append(i)
        return tuple(out)

    def face_vertices(self, i: int) -> frozenset:
        """Indices of the vertices on which inequality ``i`` is tight."""
        return frozenset(k for k, t in enumerate(self.tight_sets) if i in t)

    def triangulate_face(self, face: frozenset) -> list[tuple]:
        """Stellar triangulation of a face given by vertex indices."""
        return _stellar(self, frozenset(face), {})

    def triangulate(self) -> list[Simplex]:
        """Full-dimensional cells with ambient Lebesgue volumes."""
        cells = self.triangulate_face(frozenset(range(len(self.vertices))))
        return [euclidean_simplex([self.vertices[k] for k in c]) for c in cells]

    @cached_property
    def facets(self) -> tuple:
        out = []
        for i in self.facet_indices:
            out.append(self.facet(i))
        return tuple(out)

    def primitive_normal(self, i: int) -> tuple[tuple, Fraction]:
        """(primitive u_i in M-coordinates, n_i) for inequality ``i``."""
        a, c = self.inequalities[i]
        in_m = self.chart.functional_to_m(a)
        u = rl.primitive_part(in_m)
        k = next(j for j, x in enumerate(u) if x != 0)
        lam = in_m[k] / u[k]
        return u, c / lam

    def facet(self, i: int) -> Facet:
        u, n = self.primitive_normal(i)
        face = self.face_vertices(i)
        if rl.affine_rank([self.vertices[k] for k in face]) != self.dim - 1:
            raise GeometryError(f"inequality {i} does not define a facet")
        cells = self.triangulate_face(face)
        simplices = tuple(
            facet_simplex([self.vertices[k] for k in c], u, self.chart) for c in cells
        )
        verts = tuple(self.vertices[k] for k in sorted(face))
        return Facet(i, u, n, verts, simplices)

    def volume(self) -> Fraction:
        """Lattice-normalized volume (the total dmu mass)."""
        return sum((s.volume for s in self.triangulate()), Fraction(0)) * self.chart.mu_factor

    def translate(self, t: Sequence) -> "LatticePolytope":
        t = rl.vec(t)
        ineqs = tuple((a, c + rl.dot(a, t)) for a, c in self.inequalities)
        return LatticePolytope(self.chart, ineqs, self.known_bounded)

    def with_inequalities(self, extra) -> "LatticePolytope":
        return LatticePolytope(self.chart, self.inequalities + tuple(extra), self._bounded)


def facet_simplex(vertices: Sequence[Sequence], normal_m: Sequence[int], chart: LatticeChart) -> Simplex:
    """A simplex inside a hyperplane with normal ``normal_m`` (M-coordinates),
    measured by Lebesgue measure normalized by the lattice ``M cap normal^perp``."""
    vs = tuple(rl.vec(v) for v in vertices)
    k = len(vs) - 1
    r = chart.ambient_dim
    if k != r - 1:
        raise GeometryError("facet simplex of wrong dimension")
    if k == 0:
        return Simplex(vs, Fraction(1))
    kb = rl.kernel_lattice_basis(normal_m)             # r-1 vectors in Z^r
    kt = rl.transpose(kb)                             # r x (r-1)
    # pick r-1 independent rows of kt to solve kt c = m exactly
    rows = next(
        idx for idx in combinations(range(r), r - 1)
        if rl.det([kt[i] for i in idx]) != 0
    )
    sub = [kt[i] for i in rows]
    coords = []
    for v in vs[1:]:
        m = chart.point_to_m(rl.sub(v, vs[0]))
        c = rl.solve(sub, [m[i] for i in rows])
        coords.append(c)
    vol = abs(rl.det(coords)) / factorial(k)
    if vol == 0:
        raise GeometryError("degenerate facet simplex")
    return Simplex(vs, vol)


def _enumerate_vertices(ineqs, r):
    """All feasible points where ``r`` independent inequalities are tight."""
    found = {}
    normals = [a for a, _ in ineqs]
    for idx in combinations(range(len(ineqs)), r):
        x = rl.solve([normals[i] for i in idx], [ineqs[i][1] for i in idx])
        if x is None or x in found:
            continue
        vals = [rl.dot(a, x) for a in normals]
        if all(v <= c for v, (_, c) in zip(vals, ineqs)):
            found[x] = frozenset(i for i, (v, (_, c)) in enumerate(zip(vals, ineqs)) if v == c)
    verts = sorted(found)
    return tuple(verts), tuple(found[v] for v in verts)


def _is_bounded(ineqs, r) -> bool:
    # The recession cone {d : a_i . d <= 0} is {0} iff no box-face vertex
    # survives once a box larger than every pairwise intersection is added.
    normals = [a for a, _ in ineqs]
    if rl.rank(normals) < r:
        return False
    bound = Fraction(1)
    for idx in combinations(range(len(ineqs)), r):
        x = rl.solve([normals[i] for i in idx], [ineqs[i][1] for i in idx])
        if x is not None:
            bound = max(bound, max(abs(v) for v in x))
    box = bound * 2 + 1
    extra = []
    for k in range(r):
        e = tuple(Fraction(int(j == k)) for j in range(r))
        extra.append((e, box))
        extra.append((rl.scale(-1, e), box))
    verts, tight = _enumerate_vertices(list(ineqs) + extra, r)
    m = len(ineqs)
    return not any(any(i >= m for i in t) for t in tight)


def _stellar(poly: LatticePolytope, face: frozenset, memo) -> list[tuple]:
    if face in memo:
        return memo[face]
    verts = poly.vertices
    pts = [verts[k] for k in face]
    d = rl.affine_rank(pts)
    if d == 0:
        out = [tuple(face)]
    else:
        apex = min(face, key=lambda k: verts[k])
        subfaces = set()
        for i in range(len(poly.inequalities)):
            sub = frozenset(k for k in face if i in poly.tight_sets[k])
            if sub == face or apex in sub or not sub:
                continue
            if rl.affine_rank([verts[k] for k in sub]) == d - 1:
                subfaces.add(sub)
        out = []
        for sub in sorted(subfaces, key=lambda s: sorted(verts[k] for k in s)):
            for cell in _stellar(poly, sub, memo):
                out.append((apex,) + cell)
    memo[face] = out
    return out


# -- operations -------------------------------------------------------------


def vertices(p: LatticePolytope) -> tuple:
    return p.vertices


def pyramid_decomposition(p: LatticePolytope) -> list[tuple[int, list[Simplex]]]:
    """Cones from the origin over each facet, as lists of full cells."""
    origin = tuple(Fraction(0) for _ in range(p.dim))
    if not p.contains(origin, strict=True):
        raise GeometryError("origin is not interior to the polytope")
    out = []
    for f in p.facets:
        cells = [euclidean_simplex((origin,) + s.vertices) for s in f.simplices]
        out.append((f.index, cells))
    return out


def linearity_subdivision(p: LatticePolytope, g) -> list[tuple[int, LatticePolytope]]:
    """Full-dimensional regions on which ``g`` equals one of its pieces.

    ``g`` is a :class:`kstab.kfun.PLConcave`; region ``j`` is where piece ``j``
    attains the minimum. The first ``len(p.inequalities)`` inequalities of each
    region are those of ``p`` so boundary faces can be matched to facets.
    """
    pieces = g.ambient_pieces(p.chart)
    if len(pieces) == 1:
        return [(0, p)]
    out = []
    for j, (sj, cj) in enumerate(pieces):
        extra = []
        feasible = True
        for k, (sk, ck) in enumerate(pieces):
            if k == j:
                continue
            normal = rl.sub(sj, sk)
            if all(x == 0 for x in normal):
                if cj > ck:
                    feasible = False
                continue
            extra.append((normal, ck - cj))
        if not feasible:
            continue
        region = p.with_inequalities(extra)
        if region.is_full_dimensional():
            out.append((j, region))
    return out


def intersect(p: LatticePolytope, ineqs) -> LatticePolytope | None:
    q = p.with_inequalities(ineqs)
    return q if q.is_full_dimensional() else None
