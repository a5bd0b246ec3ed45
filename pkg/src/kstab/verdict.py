"""Decision procedure for uniform K-stability from the barycenter criterion.

The procedure has three ingredients:

* a Bernstein certificate that ``-(K + J) >= 0`` on every pyramid;
* the signs of ``L`` on the generators of the valuation cone;
* parametric scans and threshold bisection over one-parameter families.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import ratlat as rl
from .kfun import PLConcave, barycenter, functional_L
from .polyint import MultiPoly, bernstein_coefficients, bernstein_indices
from .polytope import GeometryError, Simplex, euclidean_simplex
from .spherical import (
    DatumError,
    SphericalDatum,
    SphericalFamily,
    l_m_polynomial,
    root_product,
)

DEFAULT_DEPTH = 12


# -- positivity certificates ----------------------------------------------------


class Outcome(str, enum.Enum):
    NONNEGATIVE = "nonnegative"
    COUNTEREXAMPLE = "counterexample"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SimplexRecord:
    facet: int
    cell: int
    depth: int                 # deepest subdivision level used
    leaves: int                # certified sub-simplices
    min_coefficient: Fraction  # smallest Bernstein coefficient seen at the leaves


@dataclass(frozen=True)
class PositivityCertificate:
    outcome: Outcome
    records: tuple = ()
    depth: int = 0
    point: tuple | None = None
    value: Fraction | None = None
    facet: int | None = None

    @property
    def nonnegative(self) -> bool:
        return self.outcome is Outcome.NONNEGATIVE


def _vertex_positions(k: int, deg: int) -> list[int]:
    """Where the pure vertex coefficients sit in the Bernstein ordering."""
    idx = bernstein_indices(k, deg)
    out = []
    for v in range(k + 1):
        target = tuple(deg if j == v else 0 for j in range(k + 1))
        out.append(idx.index(target))
    return out


def _split_longest_edge(s: Simplex) -> tuple[Simplex, Simplex]:
    vs = s.vertices
    best = None
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            e = rl.sub(vs[i], vs[j])
            ln = rl.dot(e, e)
            if best is None or ln > best[0]:
                best = (ln, i, j)
    _, i, j = best
    mid = tuple((a + b) / 2 for a, b in zip(vs[i], vs[j]))
    left = list(vs)
    left[j] = mid
    right = list(vs)
    right[i] = mid
    return euclidean_simplex(left), euclidean_simplex(right)


def _certify_simplex(f: MultiPoly, s: Simplex, max_depth: int):
    """Returns ("ok", depth, leaves, min coeff) | ("neg", point, value) | ("open",)."""
    deg = f.degree()
    k = len(s.vertices) - 1
    vpos = _vertex_positions(k, deg) if deg > 0 else list(range(1))
    stack = [(s, 0)]
    deepest, leaves, lowest = 0, 0, None
    while stack:
        cur, depth = stack.pop()
        coeffs = bernstein_coefficients(f, cur)
        if deg == 0:
            if coeffs[0] < 0:
                return ("neg", cur.vertices[0], coeffs[0])
        else:
            for v, pos in enumerate(vpos):
                if coeffs[pos] < 0:
                    return ("neg", cur.vertices[v], coeffs[pos])
        m = min(coeffs)
        if m >= 0:
            deepest = max(deepest, depth)
            leaves += 1
            lowest = m if lowest is None else min(lowest, m)
            continue
        if depth >= max_depth:
            return ("open",)
        a, b = _split_longest_edge(cur)
        stack.append((b, depth + 1))
        stack.append((a, depth + 1))
    return ("ok", deepest, leaves, lowest)


def nonneg_certificate(d: SphericalDatum, max_depth: int = DEFAULT_DEPTH) -> PositivityCertificate:
    """Certify ``-(K + J) >= 0`` on every pyramid by Bernstein subdivision."""
    kj = d.K + d.J
    records = []
    overall = 0
    pending = None
    for i, cells, poly in kj.pieces:
        f = -poly
        for c, s in enumerate(cells):
            res = _certify_simplex(f, s, max_depth)
            if res[0] == "neg":
                return PositivityCertificate(
                    Outcome.COUNTEREXAMPLE, tuple(records), overall, res[1], res[2], i
                )
            if res[0] == "open":
                if pending is None:
                    pending = (i, c)
                continue
            records.append(SimplexRecord(i, c, res[1], res[2], res[3]))
            overall = max(overall, res[1])
    if pending is not None:
        return PositivityCertificate(Outcome.INCONCLUSIVE, tuple(records), max_depth, facet=pending[0])
    return PositivityCertificate(Outcome.NONNEGATIVE, tuple(records), overall)


# -- barycenter and special test configurations ---------------------------------


@dataclass(frozen=True)
class ConeCheck:
    lin_values: tuple
    ray_values: tuple
    lin_annihilated: bool
    rays_strict: bool


def barycenter_cone_check(b, cone, chart) -> ConeCheck:
    """Signs of ``l(b)`` on the cone generators (``b`` in ambient coordinates)."""
    point = b.point if hasattr(b, "point") else tuple(b)

    def ev(l):
        return rl.dot(chart.functional_from_n(l), point)

    lin = tuple(ev(l) for l in cone.lin_basis)
    rays = tuple(ev(l) for l in cone.ray_gens)
    return ConeCheck(lin, rays, all(v == 0 for v in lin), all(v < 0 for v in rays))


@dataclass(frozen=True)
class StcResult:
    passes: bool
    values: tuple               # (slope, kind, L) for -lin, +lin and rays
    witness: tuple | None = None
    witness_value: Fraction | None = None


def generator_values(d: SphericalDatum) -> tuple:
    out = []
    for l in d.cone.lin_basis:
        out.append((tuple(l), "lin", functional_L(d, PLConcave.linear(l))))
        neg = tuple(-x for x in l)
        out.append((neg, "lin", functional_L(d, PLConcave.linear(neg))))
    for l in d.cone.ray_gens:
        out.append((tuple(l), "ray", functional_L(d, PLConcave.linear(l))))
    return tuple(out)


def stc_polystability(d: SphericalDatum, values: tuple | None = None) -> StcResult:
    """``L = 0`` on ``Lin(V)`` and ``L > 0`` on the rays, with a witness on failure."""
    if values is None:
        values = generator_values(d)
    for slope, kind, v in values:
        if v < 0:
            return StcResult(False, values, slope, v)
    for slope, kind, v in values:
        if kind == "lin" and v != 0:
            # unreachable given the sign test above, since L is linear on Lin(V)
            return StcResult(False, values, slope, v)
        if kind == "ray" and v == 0:
            return StcResult(False, values, slope, v)
    return StcResult(True, values)


# -- verdicts -------------------------------------------------------------------


class Kind(str, enum.Enum):
    UNIFORMLY_K_STABLE = "UniformlyKStable"
    K_SEMISTABLE_ONLY = "KSemistableOnly"
    NOT_STC_POLYSTABLE = "NotStcPolystable"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Report:
    name: str
    V: Fraction
    two_a: Fraction
    mass: Fraction
    barycenter: tuple | None
    generators: tuple
    cone: ConeCheck | None
    certificate: PositivityCertificate


@dataclass(frozen=True)
class Verdict:
    kind: Kind
    report: Report
    witness: tuple | None = None
    witness_value: Fraction | None = None
    reason: str = ""


def full_criterion(d: SphericalDatum, max_depth: int = DEFAULT_DEPTH) -> Verdict:
    cert = nonneg_certificate(d, max_depth)
    kj = d.K + d.J
    mass = kj.integral()
    bary = barycenter(d) if mass != 0 else None
    values = generator_values(d)
    cone = barycenter_cone_check(bary, d.cone, d.chart) if bary is not None and mass < 0 else None
    report = Report(d.name, d.V, d.two_a, mass, bary.point if bary else None, values, cone, cert)
    stc = stc_polystability(d, values)

    negative = [(s, v) for s, _, v in values if v < 0]
    if negative:
        s, v = negative[0]
        return Verdict(Kind.NOT_STC_POLYSTABLE, report, s, v, "L < 0 on a special test configuration")
    if cert.nonnegative and stc.passes:
        return Verdict(Kind.UNIFORMLY_K_STABLE, report)
    flat = [(s, v) for s, kind, v in values if kind == "ray" and v == 0]
    if cert.nonnegative:
        s, v = flat[0]
        return Verdict(Kind.K_SEMISTABLE_ONLY, report, s, v, "L vanishes on a ray outside Lin(V)")
    if flat:
        s, v = flat[0]
        return Verdict(Kind.NOT_STC_POLYSTABLE, report, s, v, "L vanishes on a ray outside Lin(V)")
    if cert.outcome is Outcome.COUNTEREXAMPLE:
        reason = "K + J is positive somewhere; the criterion does not apply"
    else:
        reason = f"positivity certificate not found within depth {max_depth}"
    return Verdict(Kind.INCONCLUSIVE, report, reason=reason)


# -- parametric scans -----------------------------------------------------------


class ScanError(ValueError):
    pass


def _verdict_at(args):
    family, s, chi, depth = args
    return full_criterion(family.instantiate(s, chi), depth)


def parametric_scan(
    family: SphericalFamily,
    samples: Sequence,
    chi: int | None = None,
    max_depth: int = DEFAULT_DEPTH,
    jobs: int = 1,
) -> list[tuple[Fraction, Verdict]]:
    samples = [Fraction(s) for s in samples]
    tasks = [(family, s, chi, max_depth) for s in samples]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            verdicts = list(ex.map(_verdict_at, tasks))
    else:
        verdicts = [_verdict_at(t) for t in tasks]
    return list(zip(samples, verdicts))


def grid(lo, hi, steps: int) -> list[Fraction]:
    lo, hi = Fraction(lo), Fraction(hi)
    if steps < 1:
        raise ScanError("steps must be at least 1")
    if lo > hi or (lo == hi and steps > 1):
        raise ScanError("empty parameter range")
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]


@dataclass(frozen=True)
class Bracket:
    lo: Fraction
    hi: Fraction
    verdict_lo: Verdict
    verdict_hi: Verdict
    steps: int

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2


def bisect_threshold(
    family: SphericalFamily,
    lo,
    hi,
    width,
    chi: int | None = None,
    max_depth: int = DEFAULT_DEPTH,
    probes: int = 9,
    jobs: int = 1,
) -> Bracket:
    """Smallest parameter where the positivity certificate becomes nonnegative.

    A coarse probe grid first checks that the certificate flips exactly once
    (failing below, succeeding above); anything else raises :class:`ScanError`.
    """
    lo, hi, width = Fraction(lo), Fraction(hi), Fraction(width)
    if not lo < hi:
        raise ScanError("empty parameter range")
    if width <= 0:
        raise ScanError("width must be positive")
    probe = parametric_scan(family, grid(lo, hi, max(probes, 2)), chi, max_depth, jobs)
    flags = [v.report.certificate.nonnegative for _, v in probe]
    if flags[0] or not flags[-1]:
        raise ScanError("certificate does not flip from failure to success over the range")
    first = flags.index(True)
    if not all(flags[first:]):
        raise ScanError("non-monotone certificate pattern; threshold is not unique")
    a, va = probe[first - 1]
    b, vb = probe[first]
    steps = 0
    while b - a > width:
        m = (a + b) / 2
        vm = _verdict_at((family, m, chi, max_depth))
        if vm.report.certificate.nonnegative:
            b, vb = m, vm
        else:
            a, va = m, vm
        steps += 1
    return Bracket(a, b, va, vb, steps)


# -- Fano verification ------------------------------------------------------------


@dataclass(frozen=True)
class FanoCheck:
    two_a: Fraction
    expected_two_a: Fraction
    residuals: tuple          # (facet index, residual polynomial) per pyramid

    @property
    def two_a_ok(self) -> bool:
        return self.two_a == self.expected_two_a

    @property
    def identity_ok(self) -> bool:
        return all(res.is_zero() for _, res in self.residuals)

    @property
    def ok(self) -> bool:
        return self.two_a_ok and self.identity_ok


def fano_check(d: SphericalDatum) -> FanoCheck:
    """``2a = r + N`` and ``L_{r+1} = N (r + 1 - 2a + N) prod <alpha, x + chi>``.

    With no roots the identity reads ``-(K + J) = 1``.
    """
    if not d.fano:
        raise DatumError("datum is not flagged as Fano")
    r, N = d.rank, d.card_roots
    two_a = d.two_a
    residuals = []
    if N == 0:
        for i, _, poly in (d.K + d.J).pieces:
            residuals.append((i, -poly - 1))
    else:
        target = root_product(d) * (N * (r + 1 - two_a + N))
        for i, _, poly in l_m_polynomial(d, r + 1).pieces:
            residuals.append((i, poly - target))
    return FanoCheck(two_a, Fraction(r + N), tuple(residuals))


def search_chi(
    family: SphericalFamily, s=None, max_depth: int = DEFAULT_DEPTH
) -> tuple[int | None, Verdict]:
    """Try the base point, then each chi candidate in order; stop at the first
    certificate success. Returns ``(candidate index or None, verdict)``."""
    base = full_criterion(family.instantiate(s), max_depth)
    if base.report.certificate.nonnegative:
        return None, base
    for k in range(len(family.chi_candidates)):
        try:
            d = family.instantiate(s, k)
        except (DatumError, GeometryError):
            # candidates that push the origin out of the polytope are skipped
            continue
        v = full_criterion(d, max_depth)
        if v.report.certificate.nonnegative:
            return k, v
    return None, base
