"""Degree escalation over the certificate LP, decoding and verification.

A certificate stores, per piece, the Handelman coefficients b_i and the
expanded V_i. Everything the verifier checks is rebuilt from those numbers
and the vector field; solver state is never consulted.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import AffineForm, DDecomposition, Polytope, SubPolytope, locate_pieces
from .handelman import FORMS, assemble_lp, expand, restricted_selector, square_monomials
from .lpsolve import OPTIMAL, get_solver
from .poly import (
    Polynomial,
    VectorField,
    enumerate_exponents,
    lie_derivative,
    parse_terms,
    poly_eval_many,
)

log = logging.getLogger(__name__)

GAMMA_MIN = 1e-6
SCHEMA_VERSION = 1

# verification thresholds
EXACT_TOL = 1e-8
ORIGIN_TOL = 1e-10
SAMPLE_TOL = 1e-7
CONTINUITY_TOL = 1e-8
N_SAMPLES = 10_000
N_FACET_SAMPLES = 1_000


@dataclass(frozen=True)
class CertificatePiece:
    polytope: SubPolytope
    b: np.ndarray
    V: Polynomial
    Vdot: Polynomial
    c: np.ndarray | None = None
    # Handelman coefficients of V - x.x (handelman form only)
    aux: np.ndarray | None = None


@dataclass
class Certificate:
    degree: int
    gamma: float
    pieces: tuple[CertificatePiece, ...]
    decomposition: DDecomposition
    vector_field: VectorField
    polytope: Polytope | None = None
    form: str = "handelman"

    @property
    def dim(self) -> int:
        return self.decomposition.dim

    @property
    def lie_degree(self) -> int:
        return self.degree + self.vector_field.degree - 1


@dataclass
class NotFound:
    """No certificate up to d_max; statuses and gammas are keyed by degree."""

    statuses: dict[int, str]
    gammas: dict[int, float] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return False

    def summary(self) -> str:
        return ", ".join(f"d={d}: {s}" for d, s in sorted(self.statuses.items()))


def _xx(n: int) -> Polynomial:
    return Polynomial(n, {m: 1.0 for m in square_monomials(n)})


def decode(lp, sol, D: DDecomposition, f: VectorField, polytope: Polytope | None = None) -> Certificate:
    """Turn an Optimal LP solution into a certificate.

    Round-off is cleaned: b and aux are clipped at 0, c at 0 from above and
    the entries forced to zero by the origin condition are set exactly.
    """
    if sol.status != OPTIMAL:
        raise ValueError(f"cannot decode a {sol.status} LP")
    d = lp.degree
    form = lp.meta.get("form", "coefficient")
    aux_blocks = lp.meta.get("aux_blocks", ())
    pieces = []
    for i, piece in enumerate(D.pieces):
        alphas = enumerate_exponents(d, piece.m)
        zero = set(restricted_selector(piece, d))
        mask = np.array([a in zero for a in alphas])
        b = np.maximum(sol.b_blocks[i], 0.0)
        b[mask] = 0.0
        c = np.minimum(sol.c_blocks[i], 0.0)
        aux = None
        if aux_blocks:
            s, e = aux_blocks[i]
            aux = np.maximum(sol.x[s:e], 0.0)
            aux[mask] = 0.0
        V = expand(piece, d, b)
        pieces.append(CertificatePiece(piece, b, V, lie_derivative(V, f), c, aux))
    return Certificate(d, float(sol.gamma), tuple(pieces), D, f, polytope, form)


def search_certificate(f: VectorField, D: DDecomposition, d_max: int, gamma_cap: float = 1.0,
                       gamma_min: float = GAMMA_MIN, solver: str = "simplex", form: str = "handelman",
                       d_min: int = 1, polytope: Polytope | None = None,
                       **solver_options) -> Certificate | NotFound:
    """Try d = d_min, ..., d_max and return the first certificate with gamma >= gamma_min."""
    if d_max < 1 or d_min < 1:
        raise ValueError("degrees start at 1")
    if form not in FORMS:
        raise ValueError(f"unknown LP form {form!r}")
    solve = get_solver(solver)
    statuses, gammas = {}, {}
    for d in range(d_min, d_max + 1):
        lp = assemble_lp(D, f, d, gamma_cap=gamma_cap, form=form)
        sol = solve(lp, **solver_options)
        statuses[d] = sol.status
        gammas[d] = sol.gamma
        log.info("degree %d: %s gamma=%.3g (%d vars, %d iters)", d, sol.status, sol.gamma,
                 lp.num_vars, sol.iterations)
        if sol.status == OPTIMAL and sol.gamma >= gamma_min:
            return decode(lp, sol, D, f, polytope)
    return NotFound(statuses, gammas)


# evaluation ---------------------------------------------------------------

def _locate(cert: Certificate, X: np.ndarray, tol: float) -> np.ndarray:
    idx = locate_pieces(cert.decomposition, X, tol)
    if np.any(idx < 0):
        bad = X[np.flatnonzero(idx < 0)[0]]
        raise ValueError(f"point {bad.tolist()} lies outside the certified region")
    return idx


def eval_V_many(cert: Certificate, X, tol: float = 1e-9) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    idx = _locate(cert, X, tol)
    out = np.empty(len(X))
    for i, p in enumerate(cert.pieces):
        sel = idx == i
        if np.any(sel):
            out[sel] = poly_eval_many(p.V, X[sel])
    return out


def eval_Vdot_many(cert: Certificate, X, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Per-piece <grad V_i, f> and a flag for points on more than one piece."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    idx = _locate(cert, X, tol)
    out = np.empty(len(X))
    hits = np.zeros(len(X), dtype=int)
    for i, p in enumerate(cert.pieces):
        hits += np.min(p.polytope.residuals(X), axis=1) >= -tol
        sel = idx == i
        if np.any(sel):
            out[sel] = poly_eval_many(p.Vdot, X[sel])
    return out, hits > 1


def eval_V(cert: Certificate, x, tol: float = 1e-9) -> float:
    return float(eval_V_many(cert, np.asarray(x, dtype=float)[None, :], tol)[0])


def eval_Vdot(cert: Certificate, x, tol: float = 1e-9, return_boundary: bool = False):
    v, on = eval_Vdot_many(cert, np.asarray(x, dtype=float)[None, :], tol)
    if return_boundary:
        return float(v[0]), bool(on[0])
    return float(v[0])


# verification -------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    passed: bool
    worst: float
    tol: float
    samples: int = 0
    witness: tuple | None = None


@dataclass
class VerificationReport:
    checks: dict[str, Check]
    seed: int
    n_samples: int
    n_facet_samples: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "n_facet_samples": self.n_facet_samples,
            "checks": {k: {"passed": c.passed, "worst": c.worst, "tol": c.tol, "samples": c.samples,
                           "witness": list(c.witness) if c.witness is not None else None}
                       for k, c in self.checks.items()},
        }

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {k}: worst={c.worst:.3e} tol={c.tol:.1e}"
                + (f" at {list(c.witness)}" if c.witness is not None and not c.passed else "")
                for k, c in self.checks.items()]


class _Worst:
    """Running maximum of a violation measure with its location."""

    def __init__(self):
        self.value = -np.inf
        self.where = None
        self.count = 0

    def update(self, vals: np.ndarray, where):
        self.count += len(vals)
        if len(vals) == 0:
            return
        k = int(np.argmax(vals))
        if vals[k] > self.value:
            self.value = float(vals[k])
            self.where = where(k)

    def check(self, tol: float) -> Check:
        worst = max(self.value, 0.0) + 0.0 if np.isfinite(self.value) else 0.0  # + 0.0 drops the sign of -0.0
        return Check(bool(worst <= tol), worst, tol, self.count, self.where)


def _coeff_gap(p: Polynomial, q: Polynomial) -> tuple[float, tuple | None]:
    keys = set(p.terms) | set(q.terms)
    worst, arg = 0.0, None
    for m in keys:
        g = abs(p.coeff(m) - q.coeff(m))
        if g > worst:
            worst, arg = g, m
    return worst, arg


def verify_certificate(cert: Certificate, f: VectorField | None = None, n_samples: int = N_SAMPLES,
                       seed: int = 0, n_facet_samples: int = N_FACET_SAMPLES) -> VerificationReport:
    """Exact coefficient checks plus seeded sampling on every piece and shared facet."""
    f = cert.vector_field if f is None else f
    n = cert.dim
    d = cert.degree
    dz = d + f.degree - 1
    xx = _xx(n)
    gamma = cert.gamma
    shift = gamma if cert.form == "handelman" else 0.0

    coeff_min, restricted, c_max = _Worst(), _Worst(), _Worst()
    lie_rep, pos_rep, origin = _Worst(), _Worst(), _Worst()
    positivity, decrease, continuity, expansion = _Worst(), _Worst(), _Worst(), _Worst()

    ss = np.random.SeedSequence(seed)
    piece_seeds = ss.spawn(len(cert.pieces))
    Vs, Vdots = [], []
    for i, p in enumerate(cert.pieces):
        piece = p.polytope
        b = np.asarray(p.b, dtype=float)
        alphas = enumerate_exponents(d, piece.m)
        coeff_min.update(-b, lambda k, i=i: ("b", i, alphas[k]))
        zero = set(restricted_selector(piece, d))
        bad = np.array([abs(b[k]) if a in zero else 0.0 for k, a in enumerate(alphas)])
        restricted.update(bad, lambda k, i=i: ("b", i, alphas[k]))
        V = expand(piece, d, b)
        g, m = _coeff_gap(V, p.V)
        expansion.update(np.array([g]), lambda k, i=i, m=m: ("V", i, m))
        Vdot = lie_derivative(V, f)
        Vs.append(V)
        Vdots.append(Vdot)
        if p.c is not None:
            c = np.asarray(p.c, dtype=float)
            zalphas = enumerate_exponents(dz, piece.m)
            c_max.update(c, lambda k, i=i: ("c", i, zalphas[k]))
            rhs = expand(piece, dz, c)
            g, m = _coeff_gap(Vdot + xx.scale(shift), rhs)
            lie_rep.update(np.array([g]), lambda k, i=i, m=m: ("Vdot", i, m))
        if p.aux is not None:
            aux = np.asarray(p.aux, dtype=float)
            coeff_min.update(-aux, lambda k, i=i: ("aux", i, alphas[k]))
            g, m = _coeff_gap(V + xx.scale(-1.0), expand(piece, d, aux))
            pos_rep.update(np.array([g]), lambda k, i=i, m=m: ("V-xx", i, m))
        origin.update(np.array([abs(V.coeff((0,) * n))]), lambda k, i=i: ("origin", i))

        rng = np.random.default_rng(piece_seeds[i])
        X = piece.sample(n_samples, rng)
        sq = np.sum(X * X, axis=1)
        positivity.update(sq - poly_eval_many(V, X), lambda k, i=i, X=X: (i, *X[k].tolist()))
        decrease.update(poly_eval_many(Vdot, X) + gamma * sq, lambda k, i=i, X=X: (i, *X[k].tolist()))

    adj = sorted(cert.decomposition.adjacency)
    adj_seeds = np.random.SeedSequence([seed, 1]).spawn(max(len(adj), 1))
    for t, (i, j, k, l) in enumerate(adj):
        rng = np.random.default_rng(adj_seeds[t])
        P = cert.pieces[i].polytope
        X = P.sample_facet(k, n_facet_samples, rng)
        gap = np.abs(poly_eval_many(Vs[i], X) - poly_eval_many(Vs[j], X))
        continuity.update(gap, lambda r, ij=(i, j), X=X: (*ij, *X[r].tolist()))

    checks = {
        "coefficients_nonnegative": coeff_min.check(0.0),
        "origin_coefficients_zero": restricted.check(0.0),
        "lie_coefficients_nonpositive": c_max.check(0.0),
        "expansion": expansion.check(1e-10),
        "lie_representation": lie_rep.check(EXACT_TOL),
        "origin": origin.check(ORIGIN_TOL),
        "positivity": positivity.check(SAMPLE_TOL),
        "decrease": decrease.check(SAMPLE_TOL),
        "continuity": continuity.check(CONTINUITY_TOL),
    }
    if cert.form == "handelman":
        checks["positivity_representation"] = pos_rep.check(EXACT_TOL)
    checks["continuity_exact"] = _exact_continuity(cert).check(EXACT_TOL)
    return VerificationReport(checks, seed, n_samples, n_facet_samples)


def _exact_continuity(cert: Certificate) -> _Worst:
    """Coefficient gap between the facet restrictions of neighbouring pieces."""
    w = _Worst()
    d = cert.degree
    for i, j, k, l in sorted(cert.decomposition.adjacency):
        pi, pj = cert.pieces[i], cert.pieces[j]
        bi = np.array([0.0 if a[k] else v for a, v in zip(enumerate_exponents(d, pi.polytope.m), pi.b)])
        bj = np.array([0.0 if a[l] else v for a, v in zip(enumerate_exponents(d, pj.polytope.m), pj.b)])
        g, m = _coeff_gap(expand(pi.polytope, d, bi), expand(pj.polytope, d, bj))
        w.update(np.array([g]), lambda r, t=(i, j, k, l), m=m: (*t, m))
    if w.count == 0:
        w.value = 0.0
    return w


# serialization ------------------------------------------------------------

def poly_records(p: Polynomial) -> list[dict]:
    return [{"coefficient": c, "exponents": list(m)} for m, c in p.sorted_terms()]


def _facets(fs: Sequence[AffineForm]) -> list[dict]:
    return [{"w": list(f.w), "u": f.u} for f in fs]


def _read_facets(recs) -> tuple[AffineForm, ...]:
    return tuple(AffineForm(tuple(r["w"]), r["u"]) for r in recs)


def certificate_to_dict(cert: Certificate) -> dict:
    pieces = []
    for p in cert.pieces:
        rec = {
            "facets": _facets(p.polytope.facets),
            "vertices": [list(v) for v in p.polytope.vertices],
            "b": [float(v) for v in p.b],
            "V": poly_records(p.V),
        }
        if p.c is not None:
            rec["c"] = [float(v) for v in p.c]
        if p.aux is not None:
            rec["aux"] = [float(v) for v in p.aux]
        pieces.append(rec)
    out = {
        "schema_version": SCHEMA_VERSION,
        "degree": cert.degree,
        "gamma": cert.gamma,
        "form": cert.form,
        "system": [poly_records(c) for c in cert.vector_field.components],
        "pieces": pieces,
        "adjacency": [list(t) for t in sorted(cert.decomposition.adjacency)],
    }
    if cert.polytope is not None:
        out["polytope"] = {"facets": _facets(cert.polytope.facets),
                           "vertices": [list(v) for v in cert.polytope.vertices]}
    return out


def certificate_from_dict(data: dict) -> Certificate:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported certificate schema version {data.get('schema_version')!r}")
    n = len(data["system"])
    f = VectorField(tuple(parse_terms(n, recs) for recs in data["system"]))
    subs, pieces = [], []
    for rec in data["pieces"]:
        sub = SubPolytope(_read_facets(rec["facets"]), tuple(tuple(v) for v in rec["vertices"]))
        subs.append(sub)
        V = parse_terms(n, rec["V"])
        c = np.array(rec["c"]) if "c" in rec else None
        aux = np.array(rec["aux"]) if "aux" in rec else None
        pieces.append(CertificatePiece(sub, np.array(rec["b"], dtype=float), V, lie_derivative(V, f), c, aux))
    D = DDecomposition(tuple(subs), frozenset(tuple(t) for t in data["adjacency"]))
    P = None
    if "polytope" in data:
        P = Polytope(n, _read_facets(data["polytope"]["facets"]),
                     tuple(tuple(v) for v in data["polytope"]["vertices"]))
    return Certificate(int(data["degree"]), float(data["gamma"]), tuple(pieces), D, f, P,
                       data.get("form", "handelman"))


def dump_certificate(cert: Certificate) -> str:
    return json.dumps(certificate_to_dict(cert), indent=1, sort_keys=True) + "\n"


def save_certificate(cert: Certificate, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_certificate(cert))


def load_certificate(path) -> Certificate:
    with open(path) as fh:
        return certificate_from_dict(json.load(fh))
