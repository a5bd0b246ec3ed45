"""Combinatorial data of a polarized spherical variety and derived densities.

Everything that depends on roots and weights enters only through explicit
pairings supplied by the caller, so no root-system conventions are baked in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from . import ratlat as rl
from .polyint import (
    MultiPoly,
    bernstein_coefficients,
    euler_derivative,
    integrate_cells,
    integrate_facet,
)
from .polytope import LatticeChart, LatticePolytope, pyramid_decomposition


class DatumError(ValueError):
    """Inconsistent or invalid spherical datum."""


@dataclass(frozen=True)
class Affine:
    """``const + coeff * s`` for the single family parameter ``s``."""

    const: Fraction
    coeff: Fraction = Fraction(0)

    def at(self, s) -> Fraction:
        if self.coeff == 0:
            return self.const
        if s is None:
            raise DatumError("parameter value required")
        return self.const + self.coeff * Fraction(s)

    @classmethod
    def of(cls, x) -> "Affine":
        return x if isinstance(x, Affine) else cls(Fraction(x))


@dataclass(frozen=True)
class RootEntry:
    pairing: tuple                 # x -> <alpha, x> in ambient coordinates
    chi_pairing: Fraction          # <alpha, chi>
    weyl_pairing: Fraction         # <varpi, alpha>
    two_varpi_pairing: Fraction | None = None
    two_varpi_X_pairing: Fraction | None = None

    def shifted(self) -> MultiPoly:
        """``x -> <alpha, x + chi>``."""
        return MultiPoly.affine(self.pairing, self.chi_pairing)


@dataclass(frozen=True)
class ValuationCone:
    """``Lin(V) + cone(ray_gens)``, all vectors in N-coordinates.

    Lineality basis and rays together must form a basis of ``N (x) R``
    (the cone is cosimplicial modulo its linear part).
    """

    lin_basis: tuple
    ray_gens: tuple

    def __post_init__(self):
        object.__setattr__(self, "lin_basis", tuple(tuple(int(x) for x in v) for v in self.lin_basis))
        object.__setattr__(self, "ray_gens", tuple(tuple(int(x) for x in v) for v in self.ray_gens))

    @property
    def generators(self) -> tuple:
        return self.lin_basis + self.ray_gens

    def validate(self, r: int) -> None:
        gens = self.generators
        if any(len(v) != r for v in gens):
            raise DatumError("valuation cone vectors must have length = rank")
        if len(gens) != r or rl.rank(gens) != r:
            raise DatumError(
                "valuation cone must be full-dimensional with lin_basis + rays a basis"
            )

    def coordinates(self, v: Sequence) -> tuple:
        """Coordinates of ``v`` in the basis lin_basis + ray_gens."""
        gens = self.generators
        x = rl.solve(rl.transpose(gens), [Fraction(a) for a in v])
        if x is None:
            raise DatumError("valuation cone generators are not a basis")
        return x

    def contains(self, v: Sequence) -> bool:
        x = self.coordinates(v)
        return all(c >= 0 for c in x[len(self.lin_basis):])

    def in_lin(self, v: Sequence) -> bool:
        x = self.coordinates(v)
        return all(c == 0 for c in x[len(self.lin_basis):])


@dataclass(frozen=True)
class PiecewisePoly:
    """One polynomial per pyramid ``T_i``, with the pyramid's cells."""

    pieces: tuple          # (facet_index, tuple[Simplex], MultiPoly)
    mu_factor: Fraction

    def integral(self, weight: MultiPoly | None = None) -> Fraction:
        total = Fraction(0)
        for _, cells, poly in self.pieces:
            integrand = poly if weight is None else poly * weight
            total += integrate_cells(integrand, cells)
        return total * self.mu_factor

    def piece(self, i: int) -> MultiPoly:
        for idx, _, poly in self.pieces:
            if idx == i:
                return poly
        raise KeyError(i)

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        pieces = tuple(
            (i, cells, p + other.piece(i)) for i, cells, p in self.pieces
        )
        return PiecewisePoly(pieces, self.mu_factor)

    def __neg__(self):
        return PiecewisePoly(tuple((i, c, -p) for i, c, p in self.pieces), self.mu_factor)

    def scaled(self, c) -> "PiecewisePoly":
        return PiecewisePoly(tuple((i, cells, p * c) for i, cells, p in self.pieces), self.mu_factor)


@dataclass(frozen=True, eq=False)
class SphericalDatum:
    chart: LatticeChart
    delta: LatticePolytope
    roots: tuple
    cone: ValuationCone
    n_inv_overrides: dict = field(default_factory=dict)
    fano: bool = False
    name: str = ""

    @property
    def rank(self) -> int:
        return self.chart.ambient_dim

    @property
    def card_roots(self) -> int:
        return len(self.roots)

    def validate(self) -> "SphericalDatum":
        r = self.rank
        if self.delta.chart != self.chart:
            raise DatumError("polytope chart differs from datum chart")
        self.delta.vertices
        origin = (Fraction(0),) * r
        if not self.delta.contains(origin, strict=True):
            raise DatumError("origin must be interior to the translated polytope")
        self.cone.validate(r)
        for k, a in enumerate(self.roots):
            if len(a.pairing) != r:
                raise DatumError(f"roots[{k}].pairing has wrong length")
            if a.weyl_pairing <= 0:
                raise DatumError(f"roots[{k}].weyl_pairing must be positive")
            if a.chi_pairing <= 0 or any(
                rl.dot(a.pairing, v) + a.chi_pairing < 0 for v in self.delta.vertices
            ):
                raise DatumError(f"roots[{k}]: <alpha, x+chi> must be positive on the interior")
        for i, val in self.n_inv_overrides.items():
            if i not in self.delta.facet_indices:
                raise DatumError(f"facet_overrides: {i} is not a facet index")
            if val < 0:
                raise DatumError(f"facet_overrides[{i}] must be non-negative")
            if not self.p_vanishes_on(i):
                raise DatumError(f"facet_overrides[{i}]: P does not vanish on that facet")
        return self

    # -- facet data -----------------------------------------------------------

    def n(self, i: int) -> Fraction:
        return self.delta.primitive_normal(i)[1]

    def n_inv(self, i: int) -> Fraction:
        if i in self.n_inv_overrides:
            return self.n_inv_overrides[i]
        return 1 / self.n(i)

    def p_vanishes_on(self, i: int) -> bool:
        f = self.delta.facet(i)
        p = self.P
        # the Bernstein form vanishes identically iff p does on the simplex
        return all(all(c == 0 for c in bernstein_coefficients(p, s)) for s in f.simplices)

    # -- polynomials ----------------------------------------------------------

    @cached_property
    def P(self) -> MultiPoly:
        return dh_polynomial(self)

    @cached_property
    def Q(self) -> MultiPoly:
        return q_polynomial(self)

    @cached_property
    def _v_two_a(self):
        return volume_and_a(self)

    @property
    def V(self) -> Fraction:
        return self._v_two_a[0]

    @property
    def two_a(self) -> Fraction:
        return self._v_two_a[1]

    @cached_property
    def pyramids(self) -> tuple:
        return tuple((i, tuple(cells)) for i, cells in pyramid_decomposition(self.delta))

    @cached_property
    def KJ(self) -> tuple:
        return densities_KJ(self)

    @property
    def K(self) -> PiecewisePoly:
        return self.KJ[0]

    @property
    def J(self) -> PiecewisePoly:
        return self.KJ[1]

    def translated(self, t: Sequence) -> "SphericalDatum":
        """Datum for the base point ``chi + t``: polytope shifts by ``-t``."""
        t = rl.vec(t)
        roots = tuple(replace(a, chi_pairing=a.chi_pairing + rl.dot(a.pairing, t)) for a in self.roots)
        return replace(self, delta=self.delta.translate(rl.scale(-1, t)), roots=roots)


# -- operations ---------------------------------------------------------------


def dh_polynomial(d: SphericalDatum) -> MultiPoly:
    """``P(x) = prod_alpha <alpha, x + chi> / <varpi, alpha>``."""
    p = MultiPoly.const(d.rank, 1)
    for a in d.roots:
        if a.weyl_pairing == 0:
            raise DatumError("weyl_pairing must be nonzero")
        p = p * a.shifted() * (1 / a.weyl_pairing)
    return p


def q_polynomial(d: SphericalDatum) -> MultiPoly:
    """``Q = sum_alpha <alpha, varpi> / <alpha, x + chi> * P``, as a polynomial."""
    r = d.rank
    if not d.roots:
        return MultiPoly(r)
    w = Fraction(1)
    for a in d.roots:
        if a.weyl_pairing == 0:
            raise DatumError("weyl_pairing must be nonzero")
        w *= a.weyl_pairing
    q = MultiPoly(r)
    for k, a in enumerate(d.roots):
        term = MultiPoly.const(r, a.weyl_pairing)
        for j, b in enumerate(d.roots):
            if j != k:
                term = term * b.shifted()
        q = q + term
    return q * (1 / w)


def volume_and_a(d: SphericalDatum) -> tuple[Fraction, Fraction]:
    """``(V, 2a)`` with ``V = int P dmu`` and
    ``2a = (int_boundary P dsigma + 2 int Q dmu) / V``."""
    mu = d.chart.mu_factor
    cells = d.delta.triangulate()
    V = integrate_cells(d.P, cells) * mu
    if V == 0:
        raise DatumError("degenerate datum: int P dmu = 0")
    boundary = sum((integrate_facet(d.P, f) for f in d.delta.facets), Fraction(0))
    q_int = integrate_cells(d.Q, cells) * mu
    return V, (boundary + 2 * q_int) / V


def densities_KJ(d: SphericalDatum) -> tuple[PiecewisePoly, PiecewisePoly]:
    """The pyramid-wise densities ``K`` and ``J``.

    On the cone over facet ``E_i``, with ``t = 1/n_i`` (or its override)::

        J = -t P
        K = 2a P - 2 Q - t (x . grad P) - r t P
    """
    r = d.rank
    P, Q, two_a = d.P, d.Q, d.two_a
    eP = euler_derivative(P)
    kp, jp = [], []
    for i, cells in d.pyramids:
        t = d.n_inv(i)
        jp.append((i, cells, P * (-t)))
        kp.append((i, cells, P * two_a - Q * 2 - eP * t - P * (r * t)))
    mu = d.chart.mu_factor
    return PiecewisePoly(tuple(kp), mu), PiecewisePoly(tuple(jp), mu)


def l_m_polynomial(d: SphericalDatum, m: int, use_fano_weights: bool | None = None) -> PiecewisePoly:
    """``L_m`` on each pyramid::

        sum_alpha <alpha, (m t - 2a)(x + chi) + N (t x + 2 varpi)> prod_{beta != alpha} <beta, x + chi>

    with ``t = 1/n_i`` and ``N`` the number of roots. In Fano mode ``2 varpi``
    pairings are replaced by ``2 varpi_X`` pairings.
    """
    if not d.roots:
        raise DatumError("L_m needs a nonempty root set; use densities_KJ instead")
    if use_fano_weights is None:
        use_fano_weights = d.fano
    r = d.rank
    N = len(d.roots)
    two_a = d.two_a
    tv = []
    for k, a in enumerate(d.roots):
        val = a.two_varpi_X_pairing if use_fano_weights else a.two_varpi_pairing
        if val is None:
            which = "two_varpi_X_pairing" if use_fano_weights else "two_varpi_pairing"
            raise DatumError(f"roots[{k}].{which} is required")
        tv.append(val)
    others = []
    for k in range(N):
        prod = MultiPoly.const(r, 1)
        for j, b in enumerate(d.roots):
            if j != k:
                prod = prod * b.shifted()
        others.append(prod)
    pieces = []
    for i, cells in d.pyramids:
        t = d.n_inv(i)
        total = MultiPoly(r)
        for k, a in enumerate(d.roots):
            lin = MultiPoly.affine(a.pairing)
            bracket = a.shifted() * (m * t - two_a) + (lin * t + tv[k]) * N
            total = total + bracket * others[k]
        pieces.append((i, cells, total))
    return PiecewisePoly(tuple(pieces), d.chart.mu_factor)


def root_product(d: SphericalDatum) -> MultiPoly:
    """``prod_alpha <alpha, x + chi>``."""
    p = MultiPoly.const(d.rank, 1)
    for a in d.roots:
        p = p * a.shifted()
    return p


def weyl_product(d: SphericalDatum) -> Fraction:
    w = Fraction(1)
    for a in d.roots:
        w *= a.weyl_pairing
    return w


# -- parametric families ------------------------------------------------------


@dataclass(frozen=True)
class Parameter:
    name: str
    range: tuple | None = None
    default: Fraction | None = None


@dataclass(frozen=True)
class RootSpec:
    pairing: tuple
    chi_pairing: Affine
    weyl_pairing: Fraction
    two_varpi_pairing: Fraction | None = None
    two_varpi_X_pairing: Fraction | None = None


@dataclass(frozen=True)
class SphericalFamily:
    """A datum whose offsets and chi pairings may be affine in one parameter.

    ``overrides`` maps facet index to ``("inv", q)``, ``("inf",)`` or
    ``("n", Affine)``; the last replaces ``n_i`` itself.
    """

    lattice_basis: tuple
    inequalities: tuple            # (normal, Affine)
    roots: tuple                   # RootSpec
    cone: ValuationCone
    parameter: Parameter | None = None
    fano: bool = False
    overrides: tuple = ()          # sorted (index, spec) pairs
    chi_candidates: tuple = ()     # tuples of Affine, ambient shift of chi
    name: str = ""

    @property
    def rank(self) -> int:
        return len(self.lattice_basis)

    def is_parametric(self) -> bool:
        affines = [c for _, c in self.inequalities] + [r.chi_pairing for r in self.roots]
        affines += [spec[1] for _, spec in self.overrides if spec[0] == "n"]
        affines += [a for cand in self.chi_candidates for a in cand]
        return any(a.coeff != 0 for a in affines)

    def resolve_param(self, s=None):
        if s is None and self.parameter is not None:
            s = self.parameter.default
        if s is None and self.is_parametric():
            name = self.parameter.name if self.parameter else "s"
            raise DatumError(f"parameter {name!r} needs a value")
        return None if s is None else Fraction(s)

    def instantiate(self, s=None, chi: int | None = None, validate: bool = True) -> SphericalDatum:
        s = self.resolve_param(s)
        chart = LatticeChart(self.lattice_basis)
        delta = LatticePolytope(chart, tuple((a, c.at(s)) for a, c in self.inequalities))
        roots = tuple(
            RootEntry(r.pairing, r.chi_pairing.at(s), r.weyl_pairing, r.two_varpi_pairing, r.two_varpi_X_pairing)
            for r in self.roots
        )
        over = {}
        for i, spec in self.overrides:
            if spec[0] == "inv":
                over[i] = spec[1]
            elif spec[0] == "inf":
                over[i] = Fraction(0)
            else:
                n = spec[1].at(s)
                if n <= 0:
                    raise DatumError(f"facet_overrides[{i}]: replacement n must be positive")
                over[i] = 1 / n
        d = SphericalDatum(chart, delta, roots, self.cone, over, self.fano, self.name)
        if chi is not None:
            if not 0 <= chi < len(self.chi_candidates):
                raise DatumError(f"chi candidate {chi} out of range")
            d = d.translated(tuple(a.at(s) for a in self.chi_candidates[chi]))
        return d.validate() if validate else d
