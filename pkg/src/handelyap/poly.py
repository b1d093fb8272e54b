"""Sparse multivariate polynomials over float64.

A polynomial is a map from exponent tuples to coefficients. Everything here is
an immutable value; arithmetic returns new objects and prunes coefficients
whose magnitude falls below :data:`PRUNE_TOL`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, prod
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE_TOL = 1e-12

Monomial = tuple[int, ...]


def grlex_key(m: Monomial) -> tuple:
    """Graded-lex sort key: total degree first, then larger leading exponents."""
    return (sum(m), tuple(-e for e in m))


def _compositions(total: int, k: int):
    # all k-tuples of nonnegative ints summing to `total`, lex-descending
    if k == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_exponents(d: int, k: int) -> tuple[Monomial, ...]:
    """All multi-indices alpha in N^k with |alpha|_1 <= d, in graded-lex order."""
    if k < 1:
        raise ValueError("arity must be at least 1")
    if d < 0:
        raise ValueError("degree bound must be nonnegative")
    out: list[Monomial] = []
    for total in range(d + 1):
        out.extend(_compositions(total, k))
    return tuple(out)


def exponent_count(d: int, k: int) -> int:
    """Closed-form cardinality of :func:`enumerate_exponents`; equals C(d+k, k)."""
    return sum(comb(i + k - 1, k - 1) for i in range(d + 1))


@lru_cache(maxsize=None)
def exponent_index(d: int, k: int) -> dict[Monomial, int]:
    return {m: i for i, m in enumerate(enumerate_exponents(d, k))}


@dataclass(frozen=True)
class Polynomial:
    dim: int
    terms: Mapping[Monomial, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for m, c in self.terms.items():
            m = tuple(int(e) for e in m)
            if len(m) != self.dim:
                raise ValueError(f"monomial {m} has length {len(m)}, expected {self.dim}")
            if any(e < 0 for e in m):
                raise ValueError(f"negative exponent in {m}")
            c = float(c)
            if abs(c) >= PRUNE_TOL:
                clean[m] = clean.get(m, 0.0) + c
        object.__setattr__(self, "terms", {m: c for m, c in clean.items() if abs(c) >= PRUNE_TOL})

    # construction helpers
    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, c: float) -> "Polynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def variable(cls, dim: int, j: int) -> "Polynomial":
        m = [0] * dim
        m[j] = 1
        return cls(dim, {tuple(m): 1.0})

    @classmethod
    def affine(cls, w: Sequence[float], u: float) -> "Polynomial":
        """The polynomial w.x + u."""
        dim = len(w)
        terms: dict[Monomial, float] = {(0,) * dim: u}
        for j, wj in enumerate(w):
            m = [0] * dim
            m[j] = 1
            terms[tuple(m)] = wj
        return cls(dim, terms)

    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "Polynomial":
        # trusted fast path: terms already pruned and well-formed
        p = object.__new__(cls)
        object.__setattr__(p, "dim", dim)
        object.__setattr__(p, "terms", terms)
        return p

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, m: Monomial) -> float:
        return self.terms.get(tuple(m), 0.0)

    def sorted_terms(self) -> list[tuple[Monomial, float]]:
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]))

    def _check(self, other: "Polynomial"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dim, other)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial._raw(self.dim, {m: c for m, c in out.items() if abs(c) >= PRUNE_TOL})

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.dim, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.dim, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: float) -> "Polynomial":
        s = float(s)
        return Polynomial._raw(
            self.dim, {m: c * s for m, c in self.terms.items() if abs(c * s) >= PRUNE_TOL}
        )

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out: dict[Monomial, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0.0) + c1 * c2
        return Polynomial._raw(self.dim, {m: c for m, c in out.items() if abs(c) >= PRUNE_TOL})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.dim, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, j: int) -> "Polynomial":
        """Partial derivative with respect to x_j."""
        out: dict[Monomial, float] = {}
        for m, c in self.terms.items():
            e = m[j]
            if e == 0:
                continue
            mm = m[:j] + (e - 1,) + m[j + 1:]
            out[mm] = out.get(mm, 0.0) + c * e
        return Polynomial._raw(self.dim, {m: c for m, c in out.items() if abs(c) >= PRUNE_TOL})

    def __call__(self, x) -> float:
        return poly_eval(self, x)

    def close_to(self, other: "Polynomial", tol: float = 1e-10) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coeff(m) - other.coeff(m)) <= tol for m in keys)

    def to_vector(self, basis: Mapping[Monomial, int], size: int | None = None) -> np.ndarray:
        """Dense coefficient vector over an indexed monomial basis."""
        v = np.zeros(len(basis) if size is None else size)
        for m, c in self.terms.items():
            try:
                v[basis[m]] = c
            except KeyError:
                raise ValueError(f"monomial {m} is outside the target basis") from None
        return v

    def __repr__(self):
        if not self.terms:
            return f"Polynomial(dim={self.dim}, 0)"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(
                f"x{j + 1}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(m) if e
            )
            parts.append(f"{c:+.6g}" + (f"*{mono}" if mono else ""))
        return f"Polynomial(dim={self.dim}, {' '.join(parts)})"


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_scale(p: Polynomial, s: float) -> Polynomial:
    return p.scale(s)


def poly_eval(p: Polynomial, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (p.dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({p.dim},)")
    total = 0.0
    for m, c in p.terms.items():
        total += c * prod(float(x[j]) ** e for j, e in enumerate(m) if e)
    return total


def poly_eval_many(p: Polynomial, X: np.ndarray) -> np.ndarray:
    """Evaluate at each row of X (shape (N, dim))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not p.terms:
        return np.zeros(X.shape[0])
    mons = np.array(list(p.terms.keys()), dtype=int)
    coefs = np.fromiter(p.terms.values(), dtype=float, count=len(p.terms))
    out = np.zeros(X.shape[0])
    for m, c in zip(mons, coefs):
        out += c * np.prod(X ** m, axis=1)
    return out


@dataclass(frozen=True)
class VectorField:
    components: tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector field needs at least one component")
        n = len(comps)
        for p in comps:
            if p.dim != n:
                raise ValueError(f"component has dim {p.dim}, expected {n}")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(max(p.degree for p in self.components), 0)

    def __call__(self, x) -> np.ndarray:
        return np.array([poly_eval(p, x) for p in self.components])

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        return np.stack([poly_eval_many(p, X) for p in self.components], axis=1)


def lie_derivative(p: Polynomial, f: VectorField) -> Polynomial:
    """<grad p, f> expanded in the monomial basis."""
    if p.dim != f.dim:
        raise ValueError(f"dimension mismatch: polynomial {p.dim}, field {f.dim}")
    out = Polynomial.zero(p.dim)
    for j, fj in enumerate(f.components):
        dp = p.diff(j)
        if dp.terms:
            out = out + dp * fj
    return out


def handelman_term(facets: Sequence, alpha: Sequence[int]) -> Polynomial:
    """prod_i (w_i.x + u_i)^alpha_i expanded by repeated multiplication.

    ``facets`` holds objects with ``w`` and ``u`` attributes (AffineForm) or
    plain ``(w, u)`` pairs.
    """
    if len(facets) != len(alpha):
        raise ValueError(f"{len(facets)} facets but multi-index of length {len(alpha)}")
    if not facets:
        raise ValueError("need at least one facet")
    forms = [_as_wu(fa) for fa in facets]
    dim = len(forms[0][0])
    if any(len(w) != dim for w, _ in forms):
        raise ValueError("facets do not share a dimension")
    out = Polynomial.constant(dim, 1.0)
    for (w, u), a in zip(forms, alpha):
        if a:
            out = out * Polynomial.affine(w, u) ** int(a)
    return out


def handelman_terms(facets: Sequence, d: int) -> dict[Monomial, Polynomial]:
    """Expanded Handelman products for every alpha with |alpha| <= d.

    Builds each term from a previously built one times a single facet, so the
    whole family costs one linear-factor multiplication per member.
    """
    forms = [Polynomial.affine(*_as_wu(fa)) for fa in facets]
    k = len(forms)
    dim = forms[0].dim
    out: dict[Monomial, Polynomial] = {}
    for alpha in enumerate_exponents(d, k):
        if sum(alpha) == 0:
            out[alpha] = Polynomial.constant(dim, 1.0)
            continue
        j = max(i for i, a in enumerate(alpha) if a)
        parent = alpha[:j] + (alpha[j] - 1,) + alpha[j + 1:]
        out[alpha] = out[parent] * forms[j]
    return out


def handelman_factored_eval(facets: Sequence, alpha: Sequence[int], X: np.ndarray) -> np.ndarray:
    """Evaluate the Handelman product directly from its factors at rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.ones(X.shape[0])
    for fa, a in zip(facets, alpha):
        w, u = _as_wu(fa)
        out *= (X @ np.asarray(w, dtype=float) + u) ** a
    return out


def _as_wu(fa):
    if hasattr(fa, "w"):
        return tuple(float(v) for v in fa.w), float(fa.u)
    w, u = fa
    return tuple(float(v) for v in w), float(u)


def parse_terms(dim: int, records: Iterable) -> Polynomial:
    """Build a polynomial from ``{"coefficient": c, "exponents": [...]}`` records."""
    terms: dict[Monomial, float] = {}
    for rec in records:
        m = tuple(int(e) for e in rec["exponents"])
        if len(m) != dim:
            raise ValueError(f"exponent vector {list(m)} has length {len(m)}, expected {dim}")
        terms[m] = terms.get(m, 0.0) + float(rec["coefficient"])
    return Polynomial(dim, terms)


def van_der_pol() -> VectorField:
    """Reverse-time Van der Pol oscillator: x1' = -x2, x2' = x1 + x2 (x1^2 - 1)."""
    return VectorField((
        Polynomial(2, {(0, 1): -1.0}),
        Polynomial(2, {(1, 0): 1.0, (0, 1): -1.0, (2, 1): 1.0}),
    ))
