import dataclasses
import json

import numpy as np
import pytest

from handelyap.certify import (
    Certificate,
    NotFound,
    certificate_from_dict,
    dump_certificate,
    eval_V,
    eval_V_many,
    eval_Vdot,
    load_certificate,
    save_certificate,
    search_certificate,
    verify_certificate,
)
from handelyap.geometry import decompose, named_shape, scale_polytope
from handelyap.handelman import expand
from handelyap.poly import enumerate_exponents, lie_derivative, van_der_pol


@pytest.fixture(scope="module")
def para_cert():
    P = scale_polytope(named_shape("parallelogram"), 0.5)
    cert = search_certificate(van_der_pol(), decompose(P, "star"), 4, polytope=P)
    assert isinstance(cert, Certificate)
    return cert


@pytest.fixture
def tiny_cert(stable_1d, interval_pieces):
    return search_certificate(stable_1d, interval_pieces[1], 2)


def with_b(cert, i, b):
    p = cert.pieces[i]
    V = expand(p.polytope, cert.degree, b)
    pieces = list(cert.pieces)
    pieces[i] = dataclasses.replace(p, b=b, V=V, Vdot=lie_derivative(V, cert.vector_field))
    return dataclasses.replace(cert, pieces=tuple(pieces))


def test_tiny_system(tiny_cert):
    assert tiny_cert.degree == 2
    assert abs(tiny_cert.gamma - 1.0) <= 1e-6
    rep = verify_certificate(tiny_cert)
    assert rep.passed, rep.lines()
    assert max(c.worst for c in rep.checks.values()) <= 1e-8


def test_unstable_is_rejected(unstable_1d, interval_pieces):
    res = search_certificate(unstable_1d, interval_pieces[1], 6)
    assert isinstance(res, NotFound) and not res
    assert sorted(res.statuses) == list(range(1, 7))
    assert set(res.statuses.values()) == {"Infeasible"}
    assert "d=6: Infeasible" in res.summary()


def test_parallelogram_certificate_verifies(para_cert):
    rep = verify_certificate(para_cert, n_samples=2000, n_facet_samples=200)
    assert rep.passed, rep.lines()
    assert rep.checks["positivity"].samples == 2000 * len(para_cert.pieces)


@pytest.mark.parametrize("form", ["handelman", "coefficient"])
def test_degree_start_and_form(stable_1d, interval_pieces, form):
    cert = search_certificate(stable_1d, interval_pieces[1], 4, form=form)
    assert cert.form == form and cert.degree == 2
    assert ("positivity_representation" in verify_certificate(cert).checks) == (form == "handelman")


def test_search_argument_errors(stable_1d, interval_pieces):
    with pytest.raises(ValueError):
        search_certificate(stable_1d, interval_pieces[1], 0)
    with pytest.raises(ValueError):
        search_certificate(stable_1d, interval_pieces[1], 2, form="sos")
    with pytest.raises(ValueError):
        search_certificate(stable_1d, interval_pieces[1], 2, solver="gurobi")


def test_highs_backend_finds_same_degree(para_cert):
    other = search_certificate(van_der_pol(), para_cert.decomposition, 4, solver="highs")
    assert other.degree == para_cert.degree
    assert verify_certificate(other, n_samples=500, n_facet_samples=100).passed


def test_negated_coefficients_fail(para_cert):
    bad = para_cert
    for i, p in enumerate(para_cert.pieces):
        bad = with_b(bad, i, -p.b)
    rep = verify_certificate(bad, n_samples=500, n_facet_samples=50)
    assert not rep.passed
    assert {"coefficients_nonnegative", "positivity"} <= set(rep.failures())
    assert rep.checks["positivity"].witness is not None


def test_perturbed_shared_facet_breaks_continuity(para_cert):
    i, j, k, l = sorted(para_cert.decomposition.adjacency)[0]
    p = para_cert.pieces[i]
    alphas = enumerate_exponents(para_cert.degree, p.polytope.m)
    # a term that does not vanish on facet k, and not restricted by the origin condition
    origin = p.polytope.origin_facet_indices
    pick = next(t for t, a in enumerate(alphas)
                if a[k] == 0 and sum(a) == para_cert.degree and not any(a[o] for o in origin))
    b = p.b.copy()
    b[pick] += 1e-3
    rep = verify_certificate(with_b(para_cert, i, b), n_samples=200, n_facet_samples=200)
    assert "continuity" in rep.failures()
    assert "continuity_exact" in rep.failures()
    assert rep.checks["continuity"].worst > 1e-6


def test_tampered_expansion_detected(para_cert):
    p = para_cert.pieces[0]
    pieces = list(para_cert.pieces)
    pieces[0] = dataclasses.replace(p, V=p.V + p.V.scale(1e-3))
    rep = verify_certificate(dataclasses.replace(para_cert, pieces=tuple(pieces)), n_samples=10)
    assert "expansion" in rep.failures()


def test_report_is_seeded(para_cert):
    a = verify_certificate(para_cert, n_samples=300, seed=3, n_facet_samples=30)
    b = verify_certificate(para_cert, n_samples=300, seed=3, n_facet_samples=30)
    assert a.to_dict() == b.to_dict()
    assert json.dumps(a.to_dict())
    assert all(line.startswith("PASS") for line in a.lines())


def test_eval_at_origin_and_on_shared_facets(para_cert):
    n = para_cert.dim
    assert abs(eval_V(para_cert, np.zeros(n))) <= 1e-10
    rng = np.random.default_rng(0)
    for i, j, k, l in sorted(para_cert.decomposition.adjacency):
        X = para_cert.pieces[i].polytope.sample_facet(k, 20, rng)
        from handelyap.poly import poly_eval_many
        vi = poly_eval_many(para_cert.pieces[i].V, X)
        vj = poly_eval_many(para_cert.pieces[j].V, X)
        np.testing.assert_allclose(vi, vj, atol=1e-8)
        np.testing.assert_allclose(eval_V_many(para_cert, X), vi, atol=1e-8)
        _, on = eval_Vdot(para_cert, X[0], return_boundary=True)
        assert on
    x = para_cert.pieces[0].polytope.sample(1, rng)[0]
    assert eval_Vdot(para_cert, x, return_boundary=True)[1] is False


def test_eval_outside_raises(para_cert):
    with pytest.raises(ValueError, match="outside"):
        eval_V(para_cert, [10.0, 10.0])


def test_round_trip_is_byte_identical(para_cert, tmp_path):
    path = tmp_path / "cert.json"
    save_certificate(para_cert, path)
    again = load_certificate(path)
    assert dump_certificate(again) == path.read_text()
    assert again.degree == para_cert.degree and again.gamma == para_cert.gamma
    assert verify_certificate(again, n_samples=300, n_facet_samples=30).passed


def test_unknown_schema_version(para_cert):
    data = json.loads(dump_certificate(para_cert))
    data["schema_version"] = 99
    with pytest.raises(ValueError, match="schema"):
        certificate_from_dict(data)
