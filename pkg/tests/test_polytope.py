from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from kstab import ratlat as rl
from kstab.kfun import PLConcave
from kstab.polytope import (
    GeometryError,
    LatticeChart,
    LatticePolytope,
    facet_simplex,
    linearity_subdivision,
    pyramid_decomposition,
    vertices,
)

STD2 = LatticeChart.standard(2)


def poly(ineqs, chart=STD2):
    return LatticePolytope(chart, tuple((tuple(a), F(c)) for a, c in ineqs))


SQUARE = [((1, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)]
CENTERED = [((1, 0), F(1, 2)), ((-1, 0), F(1, 2)), ((0, 1), F(1, 2)), ((0, -1), F(1, 2))]


def test_vertices_examples():
    assert set(vertices(poly(SQUARE))) == {(x, y) for x in (-1, 1) for y in (-1, 1)}
    # the s=2 polytope before translation: 0 <= x <= 3/2, y - x >= -2, y + x <= 2
    quad = poly([((-1, 0), 0), ((1, 0), F(3, 2)), ((1, -1), 2), ((1, 1), 2)])
    assert set(vertices(quad)) == {(0, -2), (F(3, 2), F(-1, 2)), (F(3, 2), F(1, 2)), (0, 2)}
    seg = LatticePolytope(LatticeChart.standard(1), (((-1,), 0), ((1,), 1)))
    assert vertices(seg) == ((0,), (1,))


def test_vertices_errors():
    with pytest.raises(GeometryError):
        vertices(poly([((1, 0), 1), ((-1, 0), 1), ((0, 1), 1)]))        # unbounded
    with pytest.raises(GeometryError):
        vertices(poly([((1, 0), 0), ((-1, 0), 0), ((0, 1), 1), ((0, -1), 1)]))  # flat
    with pytest.raises(GeometryError):
        vertices(poly([((1, 0), -1), ((-1, 0), -1), ((0, 1), 1), ((0, -1), 1)]))  # empty


def test_redundant_inequality_is_not_a_facet():
    p = poly(SQUARE + [((1, 1), 5)])
    assert p.facet_indices == (0, 1, 2, 3)


def test_repeated_inequality_counts_once():
    p = poly([((0, 1), 1), ((0, 2), 2), ((-1, 0), 1), ((0, 1), 1), ((1, -1), 1)])
    assert p.facet_indices == (0, 2, 4)
    total = sum(s.volume for _, cells in pyramid_decomposition(p) for s in cells)
    assert total == p.volume() == F(9, 2)


def test_pyramids_of_centered_square():
    pyr = pyramid_decomposition(poly(CENTERED))
    assert len(pyr) == 4
    for _, cells in pyr:
        assert sum(s.volume for s in cells) == F(1, 4)
        assert all(s.vertices[0] == (0, 0) for s in cells)


def test_pyramids_one_dimensional():
    seg = LatticePolytope(LatticeChart.standard(1), (((-1,), 1), ((1,), 2)))
    pyr = dict(pyramid_decomposition(seg))
    assert [sorted(s.vertices) for s in pyr[0]] == [[(-1,), (0,)]]
    assert [sorted(s.vertices) for s in pyr[1]] == [[(0,), (2,)]]


def test_pyramids_need_interior_origin():
    with pytest.raises(GeometryError):
        pyramid_decomposition(poly([((1, 0), 1), ((-1, 0), 0), ((0, 1), 1), ((0, -1), 1)]))


def test_quadric_pyramids_sum_to_volume(quadric):
    delta = quadric.delta
    total = sum(s.volume for _, cells in pyramid_decomposition(delta) for s in cells)
    A, _, _ = oracles.moments(oracles.polygon(delta.inequalities))
    assert total == A
    assert delta.volume() == A * 2       # dmu = 2 dx dy


def test_linearity_subdivision_examples():
    p = poly(CENTERED)
    regions = linearity_subdivision(p, PLConcave((((0, 0), 0), ((-1, 0), 0))))
    assert [j for j, _ in regions] == [0, 1]
    assert {r.volume() for _, r in regions} == {F(1, 2)}
    one = linearity_subdivision(p, PLConcave.linear((1, 1)))
    assert len(one) == 1 and one[0][1] is p

    seg = LatticePolytope(LatticeChart.standard(1), (((-1,), 2), ((1,), 2)))
    g = PLConcave((((-1,), 1), ((1,), 1), ((0,), 1)))
    regions = linearity_subdivision(seg, g)
    # the constant piece only touches the minimum at x = 0
    assert [j for j, _ in regions] == [0, 1]
    assert [r.vertices for _, r in regions] == [((0,), (2,)), ((-2,), (0,))]


def test_facet_measure_uses_lattice_normalization():
    chart = LatticeChart(((1, 0), (F(1, 2), F(1, 2))))
    # a slanted edge x + y = 1 from (0,1) to (1,0) has lattice length 2 in this chart
    s = facet_simplex([(0, 1), (1, 0)], rl.primitive_part(chart.functional_to_m((1, 1))), chart)
    assert s.volume == 2
    # a vertical edge of Euclidean length 1 has lattice length 1
    s = facet_simplex([(0, 0), (0, 1)], rl.primitive_part(chart.functional_to_m((1, 0))), chart)
    assert s.volume == 1


# -- random polygons ---------------------------------------------------------------

small = st.integers(-4, 4)


@st.composite
def random_polygon(draw):
    n = draw(st.integers(3, 7))
    ineqs = []
    for _ in range(n):
        a = (draw(small), draw(small))
        assume(a != (0, 0))
        ineqs.append((a, F(draw(st.integers(1, 6)), draw(st.integers(1, 3)))))
    p = poly(ineqs)
    assume(p.is_full_dimensional())
    return p


@settings(max_examples=60, deadline=None)
@given(random_polygon())
def test_volume_and_vertices_against_clipping(p):
    clipped = oracles.polygon(p.inequalities)
    assert set(clipped) == set(p.vertices)
    assert p.volume() == oracles.moments(clipped)[0]
    assert sum(s.volume for _, cells in pyramid_decomposition(p) for s in cells) == p.volume()


@settings(max_examples=60, deadline=None)
@given(random_polygon())
def test_facets_cover_edges(p):
    for f in p.facets:
        a, c = p.inequalities[f.index]
        assert all(rl.dot(a, v) == c for v in f.vertices)
        assert rl.dot(p.chart.functional_from_n(f.normal), f.vertices[0]) == f.offset
        ends = sorted(f.vertices)
        assert sum(s.volume for s in f.simplices) == oracles.lattice_length(ends[0], ends[-1])


def _canon(a, c):
    u = rl.primitive_part(a)
    k = next(j for j in range(len(a)) if a[j])
    return u, F(c) * u[k] / a[k]


@settings(max_examples=60, deadline=None)
@given(random_polygon())
def test_hull_reproduces_inequalities(p):
    # edges of the clipped hull, rescaled, are exactly the facet inequalities
    hull = oracles.polygon(p.inequalities)
    derived = set()
    for k in range(len(hull)):
        (x0, y0), (x1, y1) = hull[k], hull[(k + 1) % len(hull)]
        a = (y1 - y0, x0 - x1)
        derived.add(_canon(a, a[0] * x0 + a[1] * y0))
    assert derived == {_canon(*p.inequalities[i]) for i in p.facet_indices}


@settings(max_examples=40, deadline=None)
@given(random_polygon(), st.lists(st.tuples(small, small, st.integers(-3, 3)), min_size=1, max_size=4))
def test_subdivision_partitions(p, raw):
    g = PLConcave(tuple(((a, b), c) for a, b, c in raw))
    regions = linearity_subdivision(p, g)
    assert sum(r.volume() for _, r in regions) == p.volume()
    for j, r in regions:
        for v in r.vertices:
            assert g.value(v, p.chart) == rl.dot(g.ambient_pieces(p.chart)[j][0], v) + g.pieces[j][1]


def test_translate_shifts_vertices():
    p = poly(SQUARE)
    t = (F(1, 3), F(-2, 5))
    assert set(p.translate(t).vertices) == {rl.add(v, t) for v in p.vertices}
