"""Reference computations that share no code with the package under test."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import sympy as sp

# -- symbolic closed forms for the quadric blowup datum ----------------------------------

S, X, Y = sp.symbols("s x y", real=True)


def quadric_constants():
    """Closed forms in ``s`` from iterated sympy integrals on the translated polytope.

    Coordinates ``(x, y)`` stand for ``x alpha + y f`` with ``chi = (s/2) alpha``;
    ``dmu = 2 dx dy``, ``dsigma = 2 dx`` on the slanted facets and ``dy`` on ``x = (3-s)/2``.
    """
    P = 2 * X + S
    Q = sp.Integer(1)
    x0, x1 = -S / 2, (3 - S) / 2
    ylo, yhi = X - S / 2, S / 2 - X

    def area(f):
        return sp.simplify(sp.integrate(sp.integrate(2 * f, (Y, ylo, yhi)), (X, x0, x1)))

    def e1(f):   # x + y = s/2
        return sp.simplify(sp.integrate(2 * f.subs(Y, S / 2 - X), (X, x0, x1)))

    def e3(f):   # x - y = s/2
        return sp.simplify(sp.integrate(2 * f.subs(Y, X - S / 2), (X, x0, x1)))

    def e2(f):   # x = (3 - s)/2
        return sp.simplify(sp.integrate(f.subs(X, x1), (Y, x1 - S / 2, S / 2 - x1)))

    def e0(f):   # x = -s/2
        return sp.simplify(sp.integrate(f.subs(X, x0), (Y, -S, S)))

    V = area(P)
    two_q = area(2 * Q)
    bnd = {0: e0(P), 1: e1(P), 2: e2(P), 3: e3(P)}
    two_a = sp.simplify((sum(bnd.values()) + two_q) / V)

    def L(g):
        inner = area(g * (two_a * P - 2 * Q))
        outer = e0(g * P) + e1(g * P) + e2(g * P) + e3(g * P)
        return sp.simplify(inner - outer)

    return {
        "V": V,
        "int_2Q": two_q,
        "boundary": bnd,
        "two_a": two_a,
        # N-coordinates (2,1) and (0,1) are the ambient functionals 2x and 2y
        "L_alpha": L(2 * X),
        "L_minus_alpha": L(-2 * X),
        "L_f": L(2 * Y),
    }


def at(expr, s) -> Fraction:
    v = sp.nsimplify(expr.subs(S, sp.Rational(s.numerator, s.denominator)))
    v = sp.Rational(v)
    return Fraction(int(v.p), int(v.q))


# -- exact planar polygons --------------------------------------------------------------


def clip(poly, a, c):
    """Sutherland-Hodgman: keep ``a . x <= c``; ``poly`` is a vertex cycle."""
    out = []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        fp = a[0] * p[0] + a[1] * p[1] - c
        fq = a[0] * q[0] + a[1] * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def polygon(ineqs, box=Fraction(10**6)):
    poly = [(-box, -box), (box, -box), (box, box), (-box, box)]
    for a, c in ineqs:
        poly = clip(poly, a, c)
    return poly


def moments(poly):
    """(area, integral of x, integral of y) of a counter-clockwise polygon."""
    A = mx = my = Fraction(0)
    n = len(poly)
    for k in range(n):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % n]
        cr = x0 * y1 - x1 * y0
        A += cr
        mx += (x0 + x1) * cr
        my += (y0 + y1) * cr
    return A / 2, mx / 6, my / 6


def lattice_length(p, q):
    """Length of the segment pq measured in units of the primitive lattice vector."""
    dx, dy = q[0] - p[0], q[1] - p[1]
    den = 1
    for v in (dx, dy):
        den = den * v.denominator // gcd(den, v.denominator)
    ix, iy = int(dx * den), int(dy * den)
    return Fraction(gcd(ix, iy), den)


def on_line(p, a, c):
    return a[0] * p[0] + a[1] * p[1] == c


def toric_donaldson(ineqs, pieces):
    """``2a int g dx - int_boundary g dsigma`` for standard-lattice toric data.

    ``pieces`` are ``((s0, s1), c)`` with ``g = min(s . x + c)``.
    """
    base = polygon(ineqs)
    area = moments(base)[0]
    perimeter = sum(lattice_length(base[k], base[(k + 1) % len(base)]) for k in range(len(base)))
    two_a = perimeter / area
    interior = boundary = Fraction(0)
    for j, (sj, cj) in enumerate(pieces):
        region = base
        for k, (sk, ck) in enumerate(pieces):
            if k != j:
                region = clip(region, (sj[0] - sk[0], sj[1] - sk[1]), ck - cj)
            if len(region) < 3:
                break
        if len(region) < 3:
            continue
        A, mx, my = moments(region)
        if A == 0:
            continue
        interior += sj[0] * mx + sj[1] * my + cj * A
        for k in range(len(region)):
            p, q = region[k], region[(k + 1) % len(region)]
            if any(on_line(p, a, c) and on_line(q, a, c) for a, c in ineqs):
                gp = sj[0] * p[0] + sj[1] * p[1] + cj
                gq = sj[0] * q[0] + sj[1] * q[1] + cj
                boundary += lattice_length(p, q) * (gp + gq) / 2
    return two_a * interior - boundary


def centroid(ineqs):
    A, mx, my = moments(polygon(ineqs))
    return (mx / A, my / A)


# -- lattice point counts ---------------------------------------------------------------


def count_lattice_points(ineqs, k, bound):
    """Integer points of the k-dilate ``{a . x <= k c}`` inside ``[-bound, bound]^2``."""
    n = 0
    for x in range(-bound, bound + 1):
        for y in range(-bound, bound + 1):
            if all(a[0] * x + a[1] * y <= k * c for a, c in ineqs):
                n += 1
    return n


def lagrange_coefficients(points):
    """Coefficients (constant first) of the interpolating polynomial through ``points``."""
    xs = [sp.Rational(x) for x, _ in points]
    t = sp.Symbol("t")
    poly = sp.interpolate([(x, sp.Rational(y)) for x, (_, y) in zip(xs, points)], t)
    c = sp.Poly(sp.expand(poly), t).all_coeffs()[::-1]
    return [Fraction(int(sp.Rational(v).p), int(sp.Rational(v).q)) for v in c]


# -- scalar checks ----------------------------------------------------------------------


def simplex_integral_sympy(expr_terms, vertices):
    """Integral of ``sum c x^a y^b`` over a triangle via an affine change of variables."""
    u, v = sp.symbols("u v")
    (x0, y0), (x1, y1), (x2, y2) = [tuple(sp.Rational(c.numerator, c.denominator) for c in p) for p in vertices]
    xm = x0 + u * (x1 - x0) + v * (x2 - x0)
    ym = y0 + u * (y1 - y0) + v * (y2 - y0)
    jac = abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
    f = sum(sp.Rational(c.numerator, c.denominator) * xm ** a * ym ** b for (a, b), c in expr_terms.items())
    val = sp.integrate(sp.integrate(f * jac, (v, 0, 1 - u)), (u, 0, 1))
    val = sp.Rational(val)
    return Fraction(int(val.p), int(val.q))
