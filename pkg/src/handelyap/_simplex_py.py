"""Pure numpy tableau kernels; same signatures as the compiled ``_simplex_kernel``."""
from __future__ import annotations

import numpy as np

DROP_TOL = 1e-13


def pivot(T: np.ndarray, r: int, c: int) -> None:
    """Gauss-Jordan pivot on T[r, c], in place."""
    T[r] /= T[r, c]
    T[r, c] = 1.0
    nz = np.flatnonzero(T[r])
    col = T[:, c].copy()
    col[r] = 0.0
    rows = np.flatnonzero(col)
    if rows.size == 0:
        return
    block = T[np.ix_(rows, nz)] - np.outer(col[rows], T[r, nz])
    block[np.abs(block) < DROP_TOL] = 0.0
    T[np.ix_(rows, nz)] = block
    T[rows, c] = 0.0


def entering_bland(cost: np.ndarray, ncols: int, tol: float) -> int:
    """First column with negative reduced cost, or -1."""
    idx = np.flatnonzero(cost[:ncols] < -tol)
    return int(idx[0]) if idx.size else -1


def entering_dantzig(cost: np.ndarray, ncols: int, tol: float) -> int:
    """Most negative reduced cost (lowest index on ties), or -1."""
    j = int(np.argmin(cost[:ncols]))
    return j if cost[j] < -tol else -1


def ratio_test(T: np.ndarray, c: int, basis: np.ndarray, m: int, tol: float, htol: float) -> int:
    """Harris two-pass ratio test on the last column; returns -1 if unbounded.

    Rows within the relaxed bound compete on pivot size, then on smallest basic index.
    """
    col = T[:m, c]
    cand = np.flatnonzero(col > tol)
    if cand.size == 0:
        return -1
    a = col[cand]
    x = np.maximum(T[cand, -1], 0.0)
    bound = ((x + htol) / a).min()
    ok = cand[x / a <= bound]
    a = col[ok]
    top = ok[a == a.max()]
    return int(top[np.argmin(basis[top])])


def entering_steepest(T: np.ndarray, m: int, ncols: int, tol: float) -> int:
    """Exact steepest edge: maximise d_j^2 / (1 + |T[:m, j]|^2) over d_j < -tol."""
    d = T[m, :ncols]
    cand = np.flatnonzero(d < -tol)
    if cand.size == 0:
        return -1
    w = 1.0 + np.einsum("ij,ij->j", T[:m, cand], T[:m, cand])
    score = d[cand] ** 2 / w
    return int(cand[np.argmax(score)])
