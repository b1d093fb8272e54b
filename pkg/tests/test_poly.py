import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from handelyap.geometry import AffineForm
from handelyap.poly import (
    Polynomial,
    VectorField,
    enumerate_exponents,
    exponent_count,
    grlex_key,
    handelman_factored_eval,
    handelman_term,
    handelman_terms,
    lie_derivative,
    parse_terms,
    poly_add,
    poly_eval,
    poly_eval_many,
    poly_mul,
    poly_scale,
    van_der_pol,
)

X1 = Polynomial.variable(1, 0)


def x(j, n=2):
    return Polynomial.variable(n, j)


def brute_exponents(d, k):
    return {a for a in itertools.product(range(d + 1), repeat=k) if sum(a) <= d}


# enumeration ---------------------------------------------------------------

def test_enumerate_degree_zero():
    assert enumerate_exponents(0, 3) == ((0, 0, 0),)


def test_enumerate_d2_k2_order():
    assert enumerate_exponents(2, 2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def test_enumerate_d4_k3_count():
    assert len(enumerate_exponents(4, 3)) == 35 == len(brute_exponents(4, 3))


@pytest.mark.parametrize("d", range(9))
@pytest.mark.parametrize("k", range(1, 7))
def test_enumerate_cardinality_matches_closed_form(d, k):
    members = enumerate_exponents(d, k)
    assert len(members) == sum(comb(i + k - 1, k - 1) for i in range(d + 1)) == exponent_count(d, k)
    assert set(members) == brute_exponents(d, k)
    assert list(members) == sorted(members, key=grlex_key)


def test_enumerate_rejects_bad_arity():
    with pytest.raises(ValueError):
        enumerate_exponents(2, 0)


# arithmetic ------------------------------------------------------------------

def test_difference_of_squares_1d():
    p = poly_mul(X1 + 1.0, 1.0 - X1)
    assert p.terms == {(0,): 1.0, (2,): -1.0}


def test_product_with_zero():
    assert poly_mul(X1 + 3.0, Polynomial.zero(1)).is_zero()


def test_difference_of_squares_2d():
    p = (x(0) + x(1)) * (x(0) - x(1))
    assert p.terms == {(2, 0): 1.0, (0, 2): -1.0}


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        poly_add(X1, x(0))


def test_prune_threshold():
    p = Polynomial(1, {(1,): 1.0, (2,): 1e-13})
    assert p.terms == {(1,): 1.0}
    q = (X1 + 1e-3) - X1
    assert q.terms == {(0,): 1e-3}
    assert poly_scale(X1, 1e-13).is_zero()


def test_eval_examples():
    assert poly_eval(1.0 - X1 * X1, [1.0]) == 0.0
    assert poly_eval(x(0) * x(0) - x(1) * x(1), [3.0, 2.0]) == 5.0


coeffs = st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-6)


@st.composite
def polys(draw, n=2, max_deg=4):
    mons = draw(st.lists(st.tuples(*[st.integers(0, max_deg)] * n), max_size=6))
    return Polynomial(n, {m: draw(coeffs) for m in mons if sum(m) <= max_deg})


@given(polys(), polys(), st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_arithmetic_matches_evaluation(p, q, pt):
    pt = np.array(pt)
    a, b = poly_eval(p, pt), poly_eval(q, pt)
    tol = 1e-9 * (1 + abs(a) + abs(b)) ** 2
    assert abs(poly_eval(p + q, pt) - (a + b)) <= tol
    assert abs(poly_eval(p * q, pt) - a * b) <= tol * 10
    assert abs(poly_eval(poly_scale(p, -2.5), pt) + 2.5 * a) <= tol


@given(polys())
def test_eval_many_matches_pointwise(p):
    X = np.random.default_rng(0).uniform(-2, 2, size=(7, 2))
    np.testing.assert_allclose(poly_eval_many(p, X), [poly_eval(p, r) for r in X], rtol=1e-12, atol=1e-12)


# Handelman terms ---------------------------------------------------------------

def test_handelman_interval():
    p = handelman_term([AffineForm((1.0,), 1.0), AffineForm((-1.0,), 1.0)], (1, 1))
    assert p.terms == {(0,): 1.0, (2,): -1.0}


def test_handelman_empty_product():
    facets = [AffineForm((1.0, 2.0), 3.0), AffineForm((-1.0, 0.5), 1.0)]
    assert handelman_term(facets, (0, 0)).terms == {(0, 0): 1.0}


def test_handelman_squared_origin_facet():
    facets = [AffineForm((1.0, 0.0), 0.0), AffineForm((0.0, 1.0), 0.0), AffineForm((-1.0, -1.0), 1.0)]
    assert handelman_term(facets, (2, 0, 0)).terms == {(2, 0): 1.0}


def test_handelman_length_mismatch():
    with pytest.raises(ValueError):
        handelman_term([AffineForm((1.0,), 1.0)], (1, 1))


def _random_facets(rng, n, m):
    return [AffineForm(tuple(rng.uniform(-1, 1, n) + 1e-3), float(rng.uniform(0, 1.5))) for _ in range(m)]


def test_expansion_oracle_random_terms():
    # factored vs expanded on 100 random terms, n <= 3, d <= 6
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 5))
        d = int(rng.integers(0, 7))
        facets = _random_facets(rng, n, m)
        alpha = enumerate_exponents(d, m)[int(rng.integers(len(enumerate_exponents(d, m))))]
        X = rng.uniform(-1.5, 1.5, size=(20, n))
        exact = handelman_factored_eval(facets, alpha, X)
        got = poly_eval_many(handelman_term(facets, alpha), X)
        scale = np.maximum(np.abs(exact), handelman_factored_eval(
            [AffineForm(tuple(np.abs(f.w)), abs(f.u)) for f in facets], alpha, np.abs(X)))
        assert np.all(np.abs(got - exact) <= 1e-9 * np.maximum(scale, 1e-300))


def test_degree5_term_factored_vs_expanded():
    rng = np.random.default_rng(3)
    facets = _random_facets(rng, 2, 3)
    X = rng.uniform(-1, 1, (50, 2))
    exact = handelman_factored_eval(facets, (2, 2, 1), X)
    np.testing.assert_allclose(poly_eval_many(handelman_term(facets, (2, 2, 1)), X), exact, rtol=1e-9, atol=1e-12)


def test_handelman_terms_family_matches_single_terms():
    rng = np.random.default_rng(5)
    facets = _random_facets(rng, 2, 3)
    fam = handelman_terms(facets, 4)
    assert set(fam) == set(enumerate_exponents(4, 3))
    for a, p in fam.items():
        assert p.close_to(handelman_term(facets, a), 1e-10)


# Lie derivative -----------------------------------------------------------------

def test_lie_1d_linear():
    f = VectorField((Polynomial(1, {(1,): -1.0}),))
    assert lie_derivative(X1 * X1, f).terms == {(2,): -2.0}


def test_lie_vdp_quadratic():
    V = x(0) * x(0) + x(1) * x(1)
    got = lie_derivative(V, van_der_pol())
    # 2 x2^2 (x1^2 - 1), expanded by hand
    assert got.close_to(Polynomial(2, {(2, 2): 2.0, (0, 2): -2.0}), 1e-12)
    X = np.random.default_rng(1).uniform(-2, 2, (10, 2))
    np.testing.assert_allclose(poly_eval_many(got, X), 2 * X[:, 1] ** 2 * (X[:, 0] ** 2 - 1), rtol=1e-12)


def test_lie_constant_is_zero():
    assert lie_derivative(Polynomial.constant(2, 4.0), van_der_pol()).is_zero()


def test_lie_dimension_mismatch():
    with pytest.raises(ValueError):
        lie_derivative(X1, van_der_pol())


@given(polys(), polys(), st.floats(-3, 3))
def test_lie_linear(p, q, a):
    f = van_der_pol()
    lhs = lie_derivative(p.scale(a) + q, f)
    rhs = lie_derivative(p, f).scale(a) + lie_derivative(q, f)
    assert lhs.close_to(rhs, 1e-8)


@given(polys())
def test_lie_degree_bound(p):
    f = van_der_pol()
    L = lie_derivative(p, f)
    assert L.is_zero() or L.degree <= p.degree + f.degree - 1


def test_vector_field_degree_and_dim():
    f = van_der_pol()
    assert f.dim == 2 and f.degree == 3
    with pytest.raises(ValueError):
        VectorField((Polynomial(1, {(1,): 1.0}), Polynomial(2, {(1, 0): 1.0})))


def test_parse_terms():
    p = parse_terms(2, [{"coefficient": 2.0, "exponents": [1, 0]}, {"coefficient": 1.0, "exponents": [1, 0]}])
    assert p.terms == {(1, 0): 3.0}
    with pytest.raises(ValueError):
        parse_terms(2, [{"coefficient": 1.0, "exponents": [1]}])
