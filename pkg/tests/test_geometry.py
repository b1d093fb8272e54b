import numpy as np
import pytest
from hypothesis import given, strategies as st

from handelyap.geometry import (
    AffineForm,
    DDecomposition,
    Polytope,
    SubPolytope,
    decompose,
    facet_adjacency,
    locate_piece,
    locate_pieces,
    named_shape,
    polytope_from_vertices,
    quadrant_decompose,
    scale_polytope,
    star_decompose,
)


def facet_set(P):
    return {(tuple(round(v, 12) for v in f.w), round(f.u, 12)) for f in P.facets}


def shoelace(V):
    V = np.asarray(V)
    x, y = V[:, 0], V[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def test_square_facets():
    P = named_shape("square")
    assert facet_set(P) == {((1.0, 0.0), 1.0), ((-1.0, 0.0), 1.0), ((0.0, 1.0), 1.0), ((0.0, -1.0), 1.0)}


def test_parallelogram_facets_and_origin():
    P = named_shape("parallelogram")
    assert len(P.facets) == 4
    assert np.min(P.residuals(np.zeros(2))) > 0
    for v in P.vertices:
        r = P.residuals(np.array(v))[0]
        assert np.sum(np.abs(r) <= 1e-9) == 2


def test_diamond_facets():
    P = named_shape("diamond")
    got = facet_set(P)
    # +-x1 +-x2 + 1.41 >= 0
    want = {((a, b), 1.41) for a in (1.0, -1.0) for b in (1.0, -1.0)}
    assert got == want


def test_facets_counter_clockwise():
    P = named_shape("parallelogram")
    normals = np.array([f.w for f in P.facets])
    ang = np.unwrap(np.arctan2(normals[:, 1], normals[:, 0]))
    assert np.all(np.diff(ang) > 0)


def test_origin_must_be_interior():
    with pytest.raises(ValueError):
        polytope_from_vertices([(0, 0), (1, 0), (0, 1)])
    with pytest.raises(ValueError):
        polytope_from_vertices([(-1, -1), (0, 0), (1, 1)])


def test_scale_identity_and_factor():
    Q = named_shape("square")
    assert facet_set(scale_polytope(Q, 1.0)) == facet_set(Q)
    Q18 = scale_polytope(Q, 1.8)
    assert sorted(Q18.vertices) == sorted([(-1.8, -1.8), (-1.8, 1.8), (1.8, -1.8), (1.8, 1.8)])


def test_scale_1d():
    P = Polytope(1, (AffineForm((1.0,), 1.0),), ((-1.0,),))
    S = scale_polytope(P, 2.0)
    assert S.facets[0] == AffineForm((1.0,), 2.0)
    assert S.residuals(np.array([-2.0]))[0, 0] == 0.0


def test_scale_rejects_nonpositive():
    with pytest.raises(ValueError):
        scale_polytope(named_shape("square"), 0.0)


@given(st.floats(0.1, 5), st.floats(0.1, 5))
def test_scale_composes(s1, s2):
    P = named_shape("parallelogram")
    a = scale_polytope(P, s1 * s2)
    b = scale_polytope(scale_polytope(P, s1), s2)
    for fa, fb in zip(a.facets, b.facets):
        assert np.allclose(fa.w, fb.w, atol=1e-12) and abs(fa.u - fb.u) <= 1e-12 * max(1, abs(fa.u))


def test_star_diamond():
    D = star_decompose(named_shape("diamond"))
    assert len(D.pieces) == 4
    assert all(len(p.origin_facet_indices) == 2 for p in D.pieces)
    assert len(D.adjacency) == 4


def test_star_triangle():
    D = star_decompose(polytope_from_vertices([(-1, -1), (2, -1), (-1, 2)]))
    assert len(D.pieces) == 3
    assert len(D.adjacency) == 3
    pairs = {(i, j) for i, j, _, _ in D.adjacency}
    assert pairs == {(0, 1), (1, 2), (0, 2)}


def test_star_parallelogram_area():
    P = named_shape("parallelogram")
    D = star_decompose(P)
    total = sum(shoelace(p.vertices) for p in D.pieces)
    assert abs(total - shoelace(P.vertices)) <= 1e-9


def test_star_needs_2d():
    with pytest.raises(ValueError):
        star_decompose(Polytope.hypercube(3))


def test_quadrant_2d():
    D = quadrant_decompose(named_shape("square"))
    assert len(D.pieces) == 4 and all(p.m == 4 for p in D.pieces)
    assert len(D.adjacency) == 4


def test_quadrant_1d():
    D = quadrant_decompose(Polytope.hypercube(1))
    assert len(D.pieces) == 2
    (i, j, k, l), = D.adjacency
    assert D.pieces[i].facets[k].u == 0.0 and D.pieces[j].facets[l].u == 0.0
    boxes = sorted(tuple(sorted(v[0] for v in p.vertices)) for p in D.pieces)
    assert boxes == [(-1.0, 0.0), (0.0, 1.0)]


def test_quadrant_3d():
    D = quadrant_decompose(Polytope.hypercube(3))
    assert len(D.pieces) == 8 and len(D.adjacency) == 12


def test_quadrant_rejects_non_cube():
    with pytest.raises(ValueError):
        quadrant_decompose(named_shape("diamond"))


@pytest.mark.parametrize("shape,rule", [("square", "orthant"), ("square", "star"),
                                        ("parallelogram", "star"), ("diamond", "star")])
def test_adjacency_recovered_by_sampling(shape, rule):
    D = decompose(named_shape(shape), rule)
    assert facet_adjacency(D.pieces) == D.adjacency


def test_adjacency_single_piece():
    D = star_decompose(named_shape("square"))
    assert facet_adjacency(D.pieces[:1]) == frozenset()


def test_adjacency_intervals():
    left = SubPolytope((AffineForm((-1.0,), 0.0), AffineForm((1.0,), 1.0)), ((0.0,), (-1.0,)))
    right = SubPolytope((AffineForm((1.0,), 0.0), AffineForm((-1.0,), 1.0)), ((0.0,), (1.0,)))
    assert facet_adjacency([left, right]) == frozenset({(0, 1, 0, 0)})


@pytest.mark.parametrize("shape,rule", [("square", "orthant"), ("parallelogram", "star"), ("diamond", "star")])
def test_decomposition_covers_and_is_disjoint(shape, rule):
    P = named_shape(shape)
    D = decompose(P, rule)
    lo, hi = P.bounding_box()
    rng = np.random.default_rng(0)
    X = rng.uniform(lo, hi, (30000, 2))
    X = X[P.residuals(X).min(axis=1) >= 0][:10000]
    assert len(X) == 10000
    assert np.all(locate_pieces(D, X) >= 0)
    strict = np.stack([p.residuals(X).min(axis=1) > 1e-7 for p in D.pieces])
    assert strict.sum(axis=0).max() <= 1
    assert all(p.origin_facet_indices for p in D.pieces)


def test_locate_piece_rules():
    D = decompose(named_shape("square"), "orthant")
    assert locate_piece(D, [0.0, 0.0]) == 0
    for i, p in enumerate(D.pieces):
        c = np.mean(p.vertices, axis=0)
        assert locate_piece(D, c) == i
    for i, j, k, _ in D.adjacency:
        pt = D.pieces[i].sample_facet(k, 1, np.random.default_rng(1))[0]
        assert locate_piece(D, pt) == min(i, j)
    with pytest.raises(ValueError):
        locate_piece(D, [3.0, 0.0])


def test_bad_adjacency_rejected():
    D = decompose(named_shape("square"), "orthant")
    with pytest.raises(ValueError):
        DDecomposition(D.pieces, frozenset({(1, 0, 0, 0)}))


def test_vertex_must_satisfy_facets():
    with pytest.raises(ValueError):
        Polytope(1, (AffineForm((1.0,), 1.0),), ((-2.0,),))
