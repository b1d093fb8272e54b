"""Problem files: JSON describing a system, a region and search settings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from .geometry import (
    AffineForm,
    DDecomposition,
    Polytope,
    SubPolytope,
    decompose,
    default_rule,
    facet_adjacency,
    named_shape,
    polytope_from_vertices,
    scale_polytope,
)
from .poly import VectorField, parse_terms, van_der_pol

SCHEMA_VERSION = 1
SYSTEMS = {"van-der-pol": van_der_pol}

_term = {
    "type": "object",
    "properties": {
        "coefficient": {"type": "number"},
        "exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
    "required": ["coefficient", "exponents"],
    "additionalProperties": False,
}
_facet = {
    "type": "object",
    "properties": {"w": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                   "u": {"type": "number"}},
    "required": ["w", "u"],
    "additionalProperties": False,
}
_points = {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "handelyap problem file",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "system": {
            "oneOf": [
                {"enum": sorted(SYSTEMS)},
                {
                    "type": "object",
                    "properties": {
                        "n": {"type": "integer", "minimum": 1},
                        "components": {"type": "array", "items": {"type": "array", "items": _term}},
                        "d_f": {"type": "integer", "minimum": 0},
                    },
                    "required": ["n", "components"],
                    "additionalProperties": False,
                },
            ]
        },
        "polytope": {
            "type": "object",
            "properties": {
                "shape": {"enum": ["square", "parallelogram", "diamond"]},
                "vertices": _points,
                "facets": {"type": "array", "items": _facet},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "decomposition": {
            "oneOf": [
                {"enum": ["star", "orthant"]},
                {
                    "type": "object",
                    "properties": {
                        "pieces": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "object",
                                "properties": {"facets": {"type": "array", "items": _facet, "minItems": 1},
                                               "vertices": _points},
                                "required": ["facets"],
                                "additionalProperties": False,
                            },
                        },
                        "adjacency": {"type": "array",
                                      "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                                "minItems": 4, "maxItems": 4}},
                    },
                    "required": ["pieces"],
                    "additionalProperties": False,
                },
            ]
        },
        "degree": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {
                    "type": "object",
                    "properties": {"min": {"type": "integer", "minimum": 1},
                                   "max": {"type": "integer", "minimum": 1}},
                    "required": ["max"],
                    "additionalProperties": False,
                },
            ]
        },
        "solver": {
            "type": "object",
            "properties": {
                "name": {"enum": ["simplex", "highs"]},
                "rule": {"enum": ["dantzig", "steepest", "bland"]},
                "feas_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "form": {"enum": ["handelman", "coefficient"]},
        "gamma_cap": {"type": "number", "exclusiveMinimum": 0},
        "gamma_min": {"type": "number", "exclusiveMinimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "facet_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["system"],
    "additionalProperties": False,
}


class ProblemError(ValueError):
    """Malformed or inconsistent problem file."""


@dataclass
class Problem:
    system: VectorField
    polytope: Polytope | None = None
    decomposition: DDecomposition | None = None
    rule: str | None = None
    shape: str | None = None
    d_min: int = 1
    d_max: int = 8
    solver: dict = field(default_factory=dict)
    form: str = "handelman"
    gamma_cap: float = 1.0
    gamma_min: float = 1e-6
    samples: int = 10_000
    facet_samples: int = 1_000
    seed: int = 0


def _where(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def _system(spec) -> VectorField:
    if isinstance(spec, str):
        return SYSTEMS[spec]()
    n = spec["n"]
    comps = spec["components"]
    if len(comps) != n:
        raise ProblemError(f"system/components: expected {n} components, got {len(comps)}")
    polys = []
    for j, recs in enumerate(comps):
        try:
            polys.append(parse_terms(n, recs))
        except ValueError as e:
            raise ProblemError(f"system/components/{j}: {e}") from None
    f = VectorField(tuple(polys)) if polys else None
    if f is None:
        raise ProblemError("system/components: empty system")
    if "d_f" in spec and spec["d_f"] != f.degree:
        raise ProblemError(f"system/d_f: declared {spec['d_f']}, components have degree {f.degree}")
    return f


def _facets(recs, n, where) -> tuple[AffineForm, ...]:
    out = []
    for k, r in enumerate(recs):
        if len(r["w"]) != n:
            raise ProblemError(f"{where}/{k}/w: expected length {n}, got {len(r['w'])}")
        try:
            out.append(AffineForm(tuple(r["w"]), r["u"]))
        except ValueError as e:
            raise ProblemError(f"{where}/{k}: {e}") from None
    return tuple(out)


def _polytope(spec, n) -> tuple[Polytope | None, str | None]:
    if spec is None:
        return None, None
    shape = spec.get("shape")
    try:
        if shape is not None:
            if "vertices" in spec or "facets" in spec:
                raise ProblemError("polytope: give either shape or vertices/facets, not both")
            P = named_shape(shape)
        elif "facets" in spec:
            P = Polytope(n, _facets(spec["facets"], n, "polytope/facets"),
                         tuple(tuple(v) for v in spec.get("vertices", ())))
        elif "vertices" in spec:
            P = polytope_from_vertices(spec["vertices"])
        else:
            raise ProblemError("polytope: needs shape, vertices or facets")
        if P.dim != n:
            raise ProblemError(f"polytope: dimension {P.dim} does not match system dimension {n}")
        if "scale" in spec:
            P = scale_polytope(P, spec["scale"])
    except ProblemError:
        raise
    except ValueError as e:
        raise ProblemError(f"polytope: {e}") from None
    return P, shape


def _decomposition(spec, P, n) -> tuple[DDecomposition | None, str | None]:
    if spec is None:
        return None, None
    if isinstance(spec, str):
        if P is None:
            raise ProblemError(f"decomposition: rule {spec!r} needs a polytope")
        try:
            return decompose(P, spec), spec
        except ValueError as e:
            raise ProblemError(f"decomposition: {e}") from None
    pieces = []
    for i, rec in enumerate(spec["pieces"]):
        fs = _facets(rec["facets"], n, f"decomposition/pieces/{i}/facets")
        pieces.append(SubPolytope(fs, tuple(tuple(v) for v in rec.get("vertices", ()))))
    try:
        if "adjacency" in spec:
            adj = frozenset(tuple(t) for t in spec["adjacency"])
        else:
            adj = facet_adjacency(pieces)
        return DDecomposition(tuple(pieces), adj), None
    except ValueError as e:
        raise ProblemError(f"decomposition: {e}") from None


def parse_problem(data: dict) -> Problem:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ProblemError(f"{_where(e)}: {e.message}")
    f = _system(data["system"])
    P, shape = _polytope(data.get("polytope"), f.dim)
    D, rule = _decomposition(data.get("decomposition"), P, f.dim)
    if D is None and P is not None and shape is not None:
        rule = default_rule(shape)
        D = decompose(P, rule)
    deg = data.get("degree", 8)
    d_min, d_max = (1, deg) if isinstance(deg, int) else (deg.get("min", 1), deg["max"])
    if d_min > d_max:
        raise ProblemError(f"degree: min {d_min} exceeds max {d_max}")
    return Problem(
        system=f, polytope=P, decomposition=D, rule=rule, shape=shape,
        d_min=d_min, d_max=d_max, solver=dict(data.get("solver", {})),
        form=data.get("form", "handelman"),
        gamma_cap=data.get("gamma_cap", 1.0), gamma_min=data.get("gamma_min", 1e-6),
        samples=data.get("samples", 10_000), facet_samples=data.get("facet_samples", 1_000),
        seed=data.get("seed", 0),
    )


def load_problem(path) -> Problem:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ProblemError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    except OSError as e:
        raise ProblemError(f"{path}: {e.strerror}") from None
    if not isinstance(data, dict):
        raise ProblemError(f"{path}: top level must be an object")
    return parse_problem(data)
