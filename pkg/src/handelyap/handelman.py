"""Coefficient maps on Handelman coordinates and assembly of the certificate LP.

Every map is a matrix acting on the Handelman coefficient vector of one piece:

  F  expanded monomial coefficients of the represented polynomial
  H  the n square-monomial coefficients (x_j^2) of that expansion
  J  like F, restricted to basis products that avoid facet k
  G  expanded coefficients of the Lie derivative <grad P, f>
  R  0/1 selector of the products that do not vanish at the origin

The LP variable layout is ``[gamma, b_1, ..., b_L, c_1, ..., c_L]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .geometry import DDecomposition, SubPolytope
from .poly import (
    Monomial,
    Polynomial,
    VectorField,
    enumerate_exponents,
    exponent_index,
    handelman_terms,
    lie_derivative,
)

TAGS = ("F", "H", "J", "G", "R")


@dataclass(frozen=True)
class CoeffMap:
    tag: str
    piece: int
    degree: int
    rows: tuple
    matrix: np.ndarray
    columns: tuple[Monomial, ...]
    extra: int | None = None

    def __call__(self, b) -> np.ndarray:
        return self.matrix @ np.asarray(b, dtype=float)

    @property
    def shape(self):
        return self.matrix.shape


class _PieceBasis:
    """Expanded Handelman products (and their Lie derivatives) for one piece."""

    def __init__(self, piece: SubPolytope, d: int):
        self.piece = piece
        self.d = d
        self.alphas = enumerate_exponents(d, piece.m)
        self.terms = handelman_terms(piece.facets, d)
        self._lie: dict[tuple, list[Polynomial]] = {}

    def lie_terms(self, f: VectorField) -> list[Polynomial]:
        key = tuple(tuple(sorted(p.terms.items())) for p in f.components)
        if key not in self._lie:
            self._lie[key] = [lie_derivative(self.terms[a], f) for a in self.alphas]
        return self._lie[key]


@lru_cache(maxsize=64)
def _basis(piece: SubPolytope, d: int) -> _PieceBasis:
    return _PieceBasis(piece, d)


def _coeff_matrix(polys, rows_index: dict[Monomial, int]) -> np.ndarray:
    M = np.zeros((len(rows_index), len(polys)))
    for col, p in enumerate(polys):
        for m, c in p.terms.items():
            M[rows_index[m], col] = c
    return M


def square_monomials(n: int) -> tuple[Monomial, ...]:
    out = []
    for j in range(n):
        m = [0] * n
        m[j] = 2
        out.append(tuple(m))
    return tuple(out)


def restricted_selector(piece: SubPolytope, d: int) -> tuple[Monomial, ...]:
    """The alphas with alpha_j = 0 on every origin facet j (nonzero at the origin)."""
    zero = piece.origin_facet_indices
    return tuple(a for a in enumerate_exponents(d, piece.m) if all(a[j] == 0 for j in zero))


def build_map(piece: SubPolytope, d: int, tag: str, f: VectorField | None = None,
              k: int | None = None, piece_index: int = 0) -> CoeffMap:
    if tag not in TAGS:
        raise ValueError(f"unknown map tag {tag!r}")
    if tag == "G" and f is None:
        raise ValueError("the G map needs a vector field")
    if tag == "J" and k is None:
        raise ValueError("the J map needs a facet index")
    n = piece.dim
    basis = _basis(piece, d)
    alphas = basis.alphas
    if tag == "R":
        sel = restricted_selector(piece, d)
        pos = {a: i for i, a in enumerate(alphas)}
        M = np.zeros((len(sel), len(alphas)))
        for r, a in enumerate(sel):
            M[r, pos[a]] = 1.0
        return CoeffMap("R", piece_index, d, sel, M, alphas)
    if tag == "G":
        dg = d + f.degree - 1
        rows = enumerate_exponents(max(dg, 0), n)
        M = _coeff_matrix(basis.lie_terms(f), exponent_index(max(dg, 0), n))
        return CoeffMap("G", piece_index, d, rows, M, alphas)
    rows = enumerate_exponents(d, n)
    M = _coeff_matrix([basis.terms[a] for a in alphas], exponent_index(d, n))
    if tag == "F":
        return CoeffMap("F", piece_index, d, rows, M, alphas)
    if tag == "J":
        if not 0 <= k < piece.m:
            raise ValueError(f"facet index {k} out of range")
        M = M.copy()
        M[:, [c for c, a in enumerate(alphas) if a[k] > 0]] = 0.0
        return CoeffMap("J", piece_index, d, rows, M, alphas, extra=k)
    # H: rows of the square monomials x_j^2
    idx = exponent_index(d, n)
    sq = square_monomials(n)
    if d < 2:
        return CoeffMap("H", piece_index, d, sq, np.zeros((n, len(alphas))), alphas)
    return CoeffMap("H", piece_index, d, sq, M[[idx[m] for m in sq], :], alphas)


@dataclass(frozen=True)
class LPProblem:
    """max gamma subject to box bounds, A_eq x = b_eq and A_ub x <= b_ub."""

    num_vars: int
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    b_blocks: tuple[tuple[int, int], ...]
    c_blocks: tuple[tuple[int, int], ...]
    eq_labels: tuple = ()
    ub_labels: tuple = ()
    degree: int = 0
    gamma_cap: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def objective(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        c[0] = 1.0
        return c

    @property
    def num_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def num_ub(self) -> int:
        return self.A_ub.shape[0]

    def split(self, x: np.ndarray):
        """(gamma, [b_i], [c_i]) from a full variable vector."""
        x = np.asarray(x, dtype=float)
        return (float(x[0]), [x[s:e].copy() for s, e in self.b_blocks],
                [x[s:e].copy() for s, e in self.c_blocks])

    def residuals(self, x: np.ndarray) -> dict[str, float]:
        """Worst violation of each constraint family at x."""
        x = np.asarray(x, dtype=float)
        eq = np.abs(self.A_eq @ x - self.b_eq) if self.num_eq else np.zeros(0)
        ub = np.maximum(self.A_ub @ x - self.b_ub, 0.0) if self.num_ub else np.zeros(0)
        bnd = np.maximum(np.maximum(self.lb - x, x - self.ub), 0.0)
        return {
            "eq": float(eq.max(initial=0.0)),
            "ub": float(ub.max(initial=0.0)),
            "bounds": float(bnd.max(initial=0.0)),
        }


class _RowBuilder:
    def __init__(self):
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.rhs: list[float] = []
        self.labels: list = []

    def add_block(self, M: np.ndarray, offset: int, rhs, label, row_offset=None):
        """Append the rows of M, placed at column offset; returns first row id."""
        start = len(self.rhs) if row_offset is None else row_offset
        r, c = np.nonzero(M)
        self.rows.extend((r + start).tolist())
        self.cols.extend((c + offset).tolist())
        self.vals.extend(M[r, c].tolist())
        if row_offset is None:
            self.rhs.extend(np.broadcast_to(rhs, (M.shape[0],)).tolist())
            self.labels.extend(label(i) for i in range(M.shape[0]))
        return start

    def add_entry(self, row, col, val):
        self.rows.append(row)
        self.cols.append(col)
        self.vals.append(val)

    def matrix(self, ncols):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.rhs), ncols))


FORMS = ("handelman", "coefficient")


def _square_indicator(rows, n: int) -> np.ndarray:
    """Coefficient vector of x.x over the given monomial rows."""
    sq = set(square_monomials(n))
    return np.array([1.0 if m in sq else 0.0 for m in rows])


def assemble_lp(D: DDecomposition, f: VectorField, d: int, gamma_cap: float = 1.0,
                form: str = "handelman") -> LPProblem:
    """The certificate LP for a fixed degree d.

    form="coefficient" bounds only the x_j^2 coefficients of V_i and of its
    Lie derivative (H rows). form="handelman" instead asks for Handelman
    representations of V_i - x.x and of -<grad V_i, f> - gamma x.x, which
    makes the sampled inequalities hold by construction. The extra
    nonnegative coefficients of V_i - x.x sit after the c blocks.
    """
    if d < 1:
        raise ValueError("degree must be at least 1")
    if form not in FORMS:
        raise ValueError(f"unknown LP form {form!r}; choose from {FORMS}")
    if f.dim != D.dim:
        raise ValueError(f"vector field has dim {f.dim}, decomposition has dim {D.dim}")
    for i, p in enumerate(D.pieces):
        if not p.origin_facet_indices:
            raise ValueError(
                f"piece {i} has no facet through the origin; V_i(0) = 0 would force V_i == 0"
            )
    L = len(D.pieces)
    n = D.dim
    dz = d + f.degree - 1
    N = [len(enumerate_exponents(d, p.m)) for p in D.pieces]
    M = [len(enumerate_exponents(dz, p.m)) for p in D.pieces]
    b_blocks, c_blocks, aux_blocks = [], [], []
    off = 1
    for Ni in N:
        b_blocks.append((off, off + Ni))
        off += Ni
    for Mi in M:
        c_blocks.append((off, off + Mi))
        off += Mi
    if form == "handelman":
        for Ni in N:
            aux_blocks.append((off, off + Ni))
            off += Ni
    nv = off

    lb = np.zeros(nv)
    ub = np.full(nv, np.inf)
    ub[0] = gamma_cap
    for s, e in c_blocks:
        lb[s:e] = -np.inf
        ub[s:e] = 0.0

    eq, ineq = _RowBuilder(), _RowBuilder()
    for i, piece in enumerate(D.pieces):
        bs, cs = b_blocks[i][0], c_blocks[i][0]
        R = build_map(piece, d, "R", piece_index=i)
        eq.add_block(R.matrix, bs, 0.0, lambda r, i=i, R=R: ("R", i, R.rows[r]))
        G = build_map(piece, d, "G", f=f, piece_index=i)
        Fc = build_map(piece, dz, "F", piece_index=i)
        if form == "coefficient":
            H = build_map(piece, d, "H", piece_index=i)
            # H(b) >= 1  ->  -H(b) <= -1
            ineq.add_block(-H.matrix, bs, -1.0, lambda r, i=i, H=H: ("Hb", i, H.rows[r]))
            Hc = build_map(piece, dz, "H", piece_index=i)
            # H(c) + gamma <= 0
            start = ineq.add_block(Hc.matrix, cs, 0.0, lambda r, i=i, Hc=Hc: ("Hc", i, Hc.rows[r]))
            for r in range(n):
                ineq.add_entry(start + r, 0, 1.0)
            gam = np.zeros(len(G.rows))
        else:
            # F(b) - F(b~) = x.x, with b~ >= 0 vanishing at the origin like b
            a0 = aux_blocks[i][0]
            F = build_map(piece, d, "F", piece_index=i)
            eq.add_block(R.matrix, a0, 0.0, lambda r, i=i, R=R: ("R~", i, R.rows[r]))
            sq = _square_indicator(F.rows, n)
            live = np.flatnonzero(np.any(F.matrix != 0, axis=1) | (sq != 0))
            start = eq.add_block(F.matrix[live], bs, sq[live],
                                 lambda r, i=i, F=F, live=live: ("V-xx", i, F.rows[live[r]]))
            eq.add_block(-F.matrix[live], a0, None, None, row_offset=start)
            if d < 2:
                # x.x is not representable below degree 2: 0 = 1
                eq.add_block(np.zeros((n, 1)), 0, 1.0, lambda r, i=i: ("V-xx", i, square_monomials(n)[r]))
            if dz < 2:
                # gamma x.x has no matching monomial: gamma = 0
                eq.add_block(np.ones((n, 1)), 0, 0.0, lambda r, i=i: ("GF", i, square_monomials(n)[r]))
            # G(b) + gamma x.x = F(c)
            gam = _square_indicator(G.rows, n)
        # G(b) - F(c) (+ gamma x.x) = 0 over the monomials of degree <= d + d_f - 1
        live = np.flatnonzero(np.any(G.matrix != 0, axis=1) | np.any(Fc.matrix != 0, axis=1) | (gam != 0))
        start = eq.add_block(G.matrix[live], bs, 0.0,
                             lambda r, i=i, G=G, live=live: ("GF", i, G.rows[live[r]]))
        eq.add_block(-Fc.matrix[live], cs, None, None, row_offset=start)
        if np.any(gam[live]):
            eq.add_block(gam[live][:, None], 0, None, None, row_offset=start)
    for (i, j, k, l) in sorted(D.adjacency):
        Ji = build_map(D.pieces[i], d, "J", k=k, piece_index=i)
        Jj = build_map(D.pieces[j], d, "J", k=l, piece_index=j)
        live = np.flatnonzero(np.any(Ji.matrix != 0, axis=1) | np.any(Jj.matrix != 0, axis=1))
        start = eq.add_block(Ji.matrix[live], b_blocks[i][0], 0.0,
                             lambda r, t=(i, j, k, l), live=live, Ji=Ji: ("J", t, Ji.rows[live[r]]))
        eq.add_block(-Jj.matrix[live], b_blocks[j][0], None, None, row_offset=start)

    return LPProblem(
        num_vars=nv,
        A_eq=eq.matrix(nv), b_eq=np.array(eq.rhs, dtype=float),
        A_ub=ineq.matrix(nv), b_ub=np.array(ineq.rhs, dtype=float),
        lb=lb, ub=ub,
        b_blocks=tuple(b_blocks), c_blocks=tuple(c_blocks),
        eq_labels=tuple(eq.labels), ub_labels=tuple(ineq.labels),
        degree=d, gamma_cap=gamma_cap,
        meta={"N": N, "M": M, "L": L, "n": n, "d_f": f.degree, "form": form,
              "aux_blocks": tuple(aux_blocks)},
    )


def expand(piece: SubPolytope, d: int, coeffs) -> Polynomial:
    """sum_alpha coeffs[alpha] * prod_j (facet_j)^alpha_j as an expanded polynomial."""
    F = build_map(piece, d, "F")
    vals = F(coeffs)
    return Polynomial(piece.dim, {m: float(v) for m, v in zip(F.rows, vals) if v != 0.0})
