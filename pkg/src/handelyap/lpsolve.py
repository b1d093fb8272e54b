"""Two-phase primal simplex on a dense tableau.

The hot loop (pivoting, pricing, ratio test) runs in the compiled
``_simplex_kernel`` extension when it is importable and falls back to numpy
otherwise. Set ``HANDELYAP_PURE_PYTHON=1`` to force the fallback.

Pricing is Dantzig's rule (or steepest edge), switching to Bland's rule
while the objective stalls. Degeneracy is broken by a seeded bound
perturbation that is removed by a dual simplex pass at the end, so runs on
identical input are bit-identical.
"""
from __future__ import annotations

import logging
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp

log = logging.getLogger(__name__)

if os.environ.get("HANDELYAP_PURE_PYTHON"):
    from . import _simplex_py as _kernel
    BACKEND = "python"
else:
    try:
        from . import _simplex_kernel as _kernel  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        from . import _simplex_py as _kernel
        BACKEND = "python"

from . import _simplex_py

FEAS_TOL = 1e-8
PIVOT_TOL = 1e-10
MAX_ITERS = 10**6
PERTURB = 1e-6
STALL_LIMIT = 5000
REINVERT_EVERY = 100
RANK_TOL = 1e-9
DUAL_STALL_LIMIT = 200
DUAL_TOL = 1e-9
DUAL_PIVOT_REL = 1e-7
CRAWL_WINDOW = 500
CRAWL_REL = 1e-2

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITERATION_LIMIT = "IterationLimit"


def kernels(backend: str | None = None):
    if backend is None:
        return _kernel
    if backend == "python":
        return _simplex_py
    if backend == "compiled":
        from . import _simplex_kernel  # type: ignore[attr-defined]
        return _simplex_kernel
    raise ValueError(f"unknown backend {backend!r}")


@dataclass
class StandardResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int
    basis: tuple[int, ...] = ()


@dataclass
class LPSolution:
    status: str
    gamma: float
    b_blocks: list[np.ndarray]
    c_blocks: list[np.ndarray]
    iterations: int
    x: np.ndarray | None = None
    basis: tuple[int, ...] = ()
    residuals: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _numeric_rank(R: np.ndarray, rtol: float = RANK_TOL) -> int:
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0.0:
        return 0
    return int(np.count_nonzero(d > rtol * d[0]))


class _Tableau:
    """min c.x s.t. A x = b, x >= 0 with b >= 0, solved in two phases.

    Before phase 1 a crash pass pivots structural columns into every
    zero-rhs row (degenerate pivots, so feasibility is untouched) and drops
    rows that turn out empty. The tableau then carries two right-hand sides:
    a perturbed copy (last column) that drives the ratio test, and the true
    one (second to last). The perturbation shifts the lower bounds of the
    crash basis down by small random amounts, which never changes
    feasibility, only breaks ties.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, c: np.ndarray, slack_basis: dict[int, int],
                 pivot_tol: float, feas_tol: float, max_iters: int, rule: str, kern,
                 perturb: float = PERTURB, seed: int = 0):
        m, n = A.shape
        self.m, self.n = m, n
        self.A, self.b, self.c = A, b, c
        self.pivot_tol, self.feas_tol = pivot_tol, feas_tol
        self.max_iters = max_iters
        self.rule = rule
        self.k = kern
        self.iterations = 0
        art_rows = [i for i in range(m) if i not in slack_basis]
        self.n_art = len(art_rows)
        Af = np.zeros((m, n + self.n_art + 2))
        Af[:, :n] = A
        for a, i in enumerate(art_rows):
            Af[i, n + a] = 1.0
        Af[:, -2] = b
        Af[:, -1] = b
        basis = np.empty(m, dtype=np.int64)
        for i, j in slack_basis.items():
            basis[i] = j
        for a, i in enumerate(art_rows):
            basis[i] = n + a
        self.Af = Af
        self.T = np.zeros((m + 1, Af.shape[1]))
        self.T[:m] = Af
        self.basis = basis
        self.rows = np.arange(m)
        self.cost = np.zeros(Af.shape[1])
        self.perturb = perturb
        self.rng = np.random.default_rng(seed)
        self._crash()

    def _perturb(self) -> None:
        """Restart the ratio-test rhs from the true one plus a fresh bound shift."""
        m = self.m
        self.T[:m, -1] = self.T[:m, -2]
        if self.perturb > 0 and m:
            # artificial rows stay put so the perturbed problem relaxes the true one
            shift = self.perturb * (1.0 + self.rng.random(m))
            shift[self.basis >= self.n] = 0.0
            self.T[:m, -1] += shift
        self.Af[self.rows, -1] = self.Af[np.ix_(self.rows, self.basis)] @ self.T[:m, -1]

    def _crash(self) -> None:
        """Replace the artificials of zero-rhs rows by a well-conditioned structural basis.

        Pivoted QR on those rows finds the redundant ones (dropped) and then a
        column subset with a well-conditioned square block. The pivots are
        degenerate, so the crash basis is feasible.
        """
        n = self.n
        zero = [i for i in range(self.m) if self.basis[i] >= n and self.b[i] == 0.0]
        if zero:
            taken = np.zeros(n, dtype=bool)
            taken[self.basis[self.basis < n]] = True
            M = self.A[np.ix_(zero, np.flatnonzero(~taken))]
            free_cols = np.flatnonzero(~taken)
            _, R, P = scipy.linalg.qr(M.T, mode="economic", pivoting=True)
            rank = _numeric_rank(R)
            indep = [zero[p] for p in np.sort(P[:rank])]
            dropped = sorted(set(zero) - set(indep))
            if rank:
                M2 = self.A[np.ix_(indep, free_cols)]
                _, _, P2 = scipy.linalg.qr(M2, mode="economic", pivoting=True)
                cols = free_cols[np.sort(P2[:rank])]
                for i, j in zip(indep, cols):
                    art = self.basis[i]
                    self.basis[i] = j
                    # a departed artificial never comes back
                    self.Af[:, art] = 0.0
            if dropped:
                keep = np.setdiff1d(np.arange(self.m), dropped)
                self.basis = np.ascontiguousarray(self.basis[keep])
                self.rows = self.rows[keep]
                self.m = len(keep)
            self._reinvert()
        self.art_cols = np.array([j for j in self.basis if j >= n], dtype=np.int64)

    # -- bookkeeping ---------------------------------------------------
    def _reinvert(self) -> None:
        """Rebuild the tableau from the original rows and the current basis."""
        Af = self.Af[self.rows]
        B = Af[:, self.basis]
        try:
            body = np.linalg.solve(B, Af)
        except np.linalg.LinAlgError:
            return
        if not np.all(np.isfinite(body)):
            return
        body[np.abs(body) < _simplex_py.DROP_TOL] = 0.0
        body[np.arange(self.m), self.basis] = 1.0
        T = np.zeros((self.m + 1, Af.shape[1]))
        T[:self.m] = body
        T[self.m] = self.cost - self.cost[self.basis] @ body
        T[self.m, self.basis] = 0.0
        self.T = np.ascontiguousarray(T)

    def _price(self, ncols: int, bland: bool, rule: str) -> int:
        cost = self.T[self.m]
        tol = self.feas_tol * 1e-1
        if bland:
            return self.k.entering_bland(cost, ncols, tol)
        if rule == "steepest":
            return self.k.entering_steepest(self.T, self.m, ncols, tol)
        return self.k.entering_dantzig(cost, ncols, tol)

    def _run(self, ncols: int) -> str:
        stall, best = 0, np.inf
        since = 0
        rule = self.rule
        mark, mark_it = None, self.iterations
        while True:
            if self.iterations >= self.max_iters:
                return ITERATION_LIMIT
            T = self.T
            obj = -T[self.m, -1]
            if obj < best - 1e-12 * max(1.0, abs(best)):
                best, stall = obj, 0
            else:
                stall += 1
            # Dantzig can crawl for tens of thousands of tiny steps; steepest edge does not
            if mark is None:
                mark = obj
            elif self.iterations - mark_it >= CRAWL_WINDOW:
                if rule == "dantzig" and mark - obj < CRAWL_REL * max(1.0, abs(mark)):
                    rule = "steepest"
                mark, mark_it = obj, self.iterations
            bland = rule == "bland" or stall > STALL_LIMIT
            j = self._price(ncols, bland, rule)
            if j < 0:
                return OPTIMAL
            r = self.k.ratio_test(T, j, self.basis, self.m, self.pivot_tol, self.feas_tol * 1e-1)
            if r < 0:
                return UNBOUNDED
            if T[r, -1] < 0.0:
                T[r, -1] = 0.0  # bound shift: Harris may pick a slightly infeasible row
            self.k.pivot(T, r, j)
            self.basis[r] = j
            self.iterations += 1
            since += 1
            if since >= REINVERT_EVERY:
                self._reinvert()
                since = 0

    def phase1(self) -> str:
        m, n = self.m, self.n
        if self.art_cols.size:
            self.cost = np.zeros(self.Af.shape[1])
            self.cost[self.art_cols] = 1.0
            self._reinvert()
        elif self.n_art:
            self.T[m, :] = 0.0
        self._perturb()
        status = self._run(n + self.n_art)
        if status != OPTIMAL:
            return status
        self._reinvert()
        T = self.T
        # the perturbed problem is a relaxation, so this proves infeasibility
        if -T[m, -1] > self.feas_tol:
            return INFEASIBLE
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if self.basis[i] < n:
                keep.append(i)
                continue
            row = T[i, :n]
            cand = np.flatnonzero(np.abs(row) > self.pivot_tol * 1e2)
            if cand.size:
                j = int(cand[np.argmax(np.abs(row[cand]))])
                self.k.pivot(T, i, j)
                self.basis[i] = j
                keep.append(i)
        keep_arr = np.array(keep, dtype=np.int64)
        cols = np.r_[np.arange(n), self.Af.shape[1] - 2, self.Af.shape[1] - 1]
        self.Af = np.ascontiguousarray(self.Af[:, cols])
        self.rows = self.rows[keep_arr]
        self.basis = np.ascontiguousarray(self.basis[keep_arr])
        self.m = len(keep)
        T2 = np.zeros((self.m + 1, n + 2))
        T2[:-1] = T[keep_arr][:, cols]
        self.T = np.ascontiguousarray(T2)
        self.n_art = 0
        return OPTIMAL

    def phase2(self) -> str:
        if self.n_art:
            raise RuntimeError("phase 1 has not removed the artificials")
        n = self.n
        self.cost = np.zeros(self.Af.shape[1])
        self.cost[:n] = self.c
        self._reinvert()
        status = self._run(n)
        if status != OPTIMAL:
            return status
        self._reinvert()
        return self._cleanup(n)

    def _cleanup(self, ncols: int) -> str:
        """Dual simplex on the true rhs until the basis is primal feasible again.

        Reduced costs are untouched by the rhs swap, so the basis stays dual
        feasible and the result is optimal for the unperturbed problem.
        """
        m, n = self.m, ncols
        since, stall, best = 0, 0, np.inf
        tol = self.feas_tol
        while self.iterations < self.max_iters:
            T = self.T
            x = T[:m, -2]
            bad = np.flatnonzero(x < -tol)
            if bad.size == 0:
                return OPTIMAL
            infeas = -x[bad].sum()
            if infeas < best * (1.0 - 1e-9):
                best, stall = infeas, 0
            else:
                stall += 1
            bland = stall > DUAL_STALL_LIMIT
            if bland:
                r = int(bad[np.argmin(self.basis[bad])])
            else:
                r = int(bad[np.argmin(x[bad])])
            row = T[r, :n]
            # entries this small relative to the row are round-off; a row with
            # nothing larger is a Farkas certificate of infeasibility
            thresh = max(self.pivot_tol, DUAL_PIVOT_REL * np.abs(row).max(initial=0.0))
            cand = np.flatnonzero(row < -thresh)
            if cand.size == 0:
                return INFEASIBLE
            a = -row[cand]
            dj = np.maximum(T[m, cand], 0.0)
            if bland:
                ratios = dj / a
                rmin = ratios.min()
                tie = ratios <= rmin + 1e-12 * max(1.0, rmin)
                j = int(cand[tie][0])
            else:
                # Harris: widen the bound by the dual tolerance, then take the largest pivot
                bound = np.min((dj + DUAL_TOL) / a)
                ok = dj / a <= bound
                j = int(cand[ok][np.argmax(a[ok])])
            self.k.pivot(T, r, j)
            self.basis[r] = j
            self.iterations += 1
            since += 1
            if since >= REINVERT_EVERY:
                self._reinvert()
                since = 0
        return ITERATION_LIMIT

    def solution(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.basis] = self.T[:self.m, -2]
        # re-solve the basic system on the original rows to shed pivot drift
        B = self.A[np.ix_(self.rows, self.basis)]
        try:
            with warnings.catch_warnings():
                # a singular basis leaves non-finite xb and the tableau values are kept
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu = scipy.linalg.lu_factor(B)
            rhs = self.b[self.rows]
            xb = scipy.linalg.lu_solve(lu, rhs)
            for _ in range(3):
                xb += scipy.linalg.lu_solve(lu, rhs - B @ xb)
            if np.all(np.isfinite(xb)):
                x2 = np.zeros(self.n)
                x2[self.basis] = xb
                if np.abs(self.A @ x2 - self.b).max(initial=0.0) <= np.abs(self.A @ x - self.b).max(initial=0.0):
                    x = x2
        except (np.linalg.LinAlgError, ValueError):
            pass
        x[(x < 0) & (x > -self.feas_tol)] = 0.0
        return x


def solve_standard(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None,
                   feas_tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL,
                   max_iters: int = MAX_ITERS, rule: str = "dantzig",
                   backend: str | None = None, perturb: float = PERTURB) -> StandardResult:
    """Minimise c.x subject to A_ub x <= b_ub, A_eq x = b_eq and lb <= x <= ub.

    Defaults: lb = 0, ub = +inf. Rows are equilibrated (max-abs scaling)
    before solving. Status strings match :class:`LPSolution`.
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    lb = np.zeros(nv) if lb is None else np.asarray(lb, dtype=float).copy()
    ub = np.full(nv, np.inf) if ub is None else np.asarray(ub, dtype=float).copy()

    def dense(A, rows):
        if A is None:
            return np.zeros((0, nv))
        A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        return A.reshape(rows, nv) if A.size else np.zeros((0, nv))

    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    Aub = dense(A_ub, b_ub.size)
    Aeq = dense(A_eq, b_eq.size)

    if np.any(lb > ub + feas_tol):
        return StandardResult(INFEASIBLE, None, np.nan, 0)

    # presolve: singleton equality rows with zero rhs on a variable bounded at 0
    fixed = np.zeros(nv, dtype=bool)
    keep_eq = np.ones(b_eq.size, dtype=bool)
    for r in range(b_eq.size):
        nz = np.flatnonzero(Aeq[r])
        if nz.size == 1 and b_eq[r] == 0.0:
            j = nz[0]
            if lb[j] <= 0.0 <= ub[j]:
                fixed[j] = True
                keep_eq[r] = False
    Aeq, b_eq = Aeq[keep_eq], b_eq[keep_eq]

    # variable substitution x = shift + sign * y (y >= 0), free vars split
    cols, shift = [], np.zeros(nv)
    extra_ub_rows = []
    for j in range(nv):
        if fixed[j]:
            continue
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    S = np.zeros((nv, ny))
    for k, (j, s) in enumerate(cols):
        S[j, k] = s
    cy = c @ S
    Aub_y = Aub @ S
    bub_y = b_ub - Aub @ shift
    Aeq_y = Aeq @ S
    beq_y = b_eq - Aeq @ shift
    if extra_ub_rows:
        E = np.zeros((len(extra_ub_rows), ny))
        for r, (k, cap) in enumerate(extra_ub_rows):
            E[r, k] = 1.0
        Aub_y = np.vstack([Aub_y, E])
        bub_y = np.concatenate([bub_y, [cap for _, cap in extra_ub_rows]])

    # drop empty rows (check consistency)
    for A_, b_, is_eq in ((Aub_y, bub_y, False), (Aeq_y, beq_y, True)):
        empty = ~np.any(A_ != 0.0, axis=1)
        if is_eq and np.any(np.abs(b_[empty]) > feas_tol):
            return StandardResult(INFEASIBLE, None, np.nan, 0)
        if not is_eq and np.any(b_[empty] < -feas_tol):
            return StandardResult(INFEASIBLE, None, np.nan, 0)
    ne_ub = np.any(Aub_y != 0.0, axis=1)
    ne_eq = np.any(Aeq_y != 0.0, axis=1)
    Aub_y, bub_y = Aub_y[ne_ub], bub_y[ne_ub]
    Aeq_y, beq_y = Aeq_y[ne_eq], beq_y[ne_eq]

    # equilibrate rows
    for A_, b_ in ((Aub_y, bub_y), (Aeq_y, beq_y)):
        if A_.shape[0]:
            s = np.abs(A_).max(axis=1)
            A_ /= s[:, None]
            b_ /= s

    mu, me = Aub_y.shape[0], Aeq_y.shape[0]
    m = mu + me
    A = np.zeros((m, ny + mu))
    A[:mu, :ny] = Aub_y
    A[:mu, ny:] = np.eye(mu)
    A[mu:, :ny] = Aeq_y
    b = np.concatenate([bub_y, beq_y])
    cost = np.concatenate([cy, np.zeros(mu)])
    slack_basis = {}
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
        elif i < mu:
            slack_basis[i] = ny + i
    A = np.ascontiguousarray(A)

    tab = _Tableau(A, b, cost, slack_basis, pivot_tol, feas_tol, max_iters, rule, kernels(backend),
                   perturb=perturb)
    status = tab.phase1()
    if status != OPTIMAL:
        return StandardResult(status, None, np.nan, tab.iterations)
    status = tab.phase2()
    if status != OPTIMAL:
        return StandardResult(status, None, np.nan, tab.iterations)
    y = tab.solution()[:ny]
    x = shift + S @ y
    x[fixed] = 0.0
    return StandardResult(OPTIMAL, x, float(c @ x), tab.iterations, tuple(int(j) for j in tab.basis))


Solver = Callable[..., LPSolution]


def solve(lp, feas_tol: float = FEAS_TOL, max_iters: int = MAX_ITERS,
          pivot_tol: float = PIVOT_TOL, rule: str = "dantzig", backend: str | None = None,
          perturb: float = PERTURB) -> LPSolution:
    """Maximise gamma in an assembled :class:`~handelyap.handelman.LPProblem`."""
    res = solve_standard(
        -lp.objective, A_ub=lp.A_ub, b_ub=lp.b_ub, A_eq=lp.A_eq, b_eq=lp.b_eq,
        lb=lp.lb, ub=lp.ub, feas_tol=feas_tol, pivot_tol=pivot_tol,
        max_iters=max_iters, rule=rule, backend=backend, perturb=perturb,
    )
    return _wrap(lp, res)


def _wrap(lp, res: StandardResult) -> LPSolution:
    if res.status != OPTIMAL:
        return LPSolution(res.status, 0.0, [], [], res.iterations)
    gamma, bs, cs = lp.split(res.x)
    return LPSolution(OPTIMAL, gamma, bs, cs, res.iterations, res.x, res.basis, lp.residuals(res.x))


def solve_highs(lp, feas_tol: float = FEAS_TOL, **_) -> LPSolution:
    """Same contract as :func:`solve`, backed by scipy's HiGHS interface."""
    from scipy.optimize import linprog

    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in zip(lp.lb, lp.ub)]
    r = linprog(-lp.objective, A_ub=lp.A_ub if lp.num_ub else None, b_ub=lp.b_ub if lp.num_ub else None,
                A_eq=lp.A_eq if lp.num_eq else None, b_eq=lp.b_eq if lp.num_eq else None,
                bounds=bounds, method="highs",
                options={"primal_feasibility_tolerance": feas_tol, "dual_feasibility_tolerance": feas_tol})
    status = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(r.status, INFEASIBLE)
    return _wrap(lp, StandardResult(status, r.x if status == OPTIMAL else None,
                                    float(r.fun) if status == OPTIMAL else np.nan, int(r.nit)))


SOLVERS: dict[str, Solver] = {"simplex": solve, "highs": solve_highs}


def get_solver(name: str) -> Solver:
    try:
        return SOLVERS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None


def write_mps(lp, path, name: str = "HANDELMAN") -> None:
    """Dump the LP as free-format MPS (minimising -gamma), values at full precision."""
    A_eq = sp.csc_matrix(lp.A_eq)
    A_ub = sp.csc_matrix(lp.A_ub)
    rows = [f"E{i}" for i in range(lp.num_eq)] + [f"L{i}" for i in range(lp.num_ub)]
    out = [f"NAME          {name}", "ROWS", " N  OBJ"]
    out += [f" E  {r}" for r in rows[:lp.num_eq]]
    out += [f" L  {r}" for r in rows[lp.num_eq:]]
    out.append("COLUMNS")

    def fld(s):
        return f"{s:<8}"[:8] if len(s) <= 8 else s

    for j in range(lp.num_vars):
        entries = []
        if j == 0:
            entries.append(("OBJ", -1.0))
        col = A_eq[:, j]
        entries += [(f"E{i}", v) for i, v in zip(col.indices, col.data)]
        col = A_ub[:, j]
        entries += [(f"L{i}", v) for i, v in zip(col.indices, col.data)]
        for r, v in entries:
            out.append(f"    {fld(f'X{j}')}  {fld(r)}  {float(v)!r}")
    out.append("RHS")
    for i, v in enumerate(lp.b_eq):
        if v != 0:
            out.append(f"    {fld('RHS')}  {fld(f'E{i}')}  {float(v)!r}")
    for i, v in enumerate(lp.b_ub):
        if v != 0:
            out.append(f"    {fld('RHS')}  {fld(f'L{i}')}  {float(v)!r}")
    out.append("BOUNDS")
    for j in range(lp.num_vars):
        lo, hi = lp.lb[j], lp.ub[j]
        name_j = fld(f"X{j}")
        if np.isinf(lo) and hi == 0.0:
            out.append(f" MI {fld('BND')}  {name_j}")
            out.append(f" UP {fld('BND')}  {name_j}  0.0")
        elif np.isfinite(hi):
            out.append(f" UP {fld('BND')}  {name_j}  {float(hi)!r}")
    out.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
