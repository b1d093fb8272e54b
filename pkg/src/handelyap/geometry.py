"""Polytopes, D-decompositions and shared-facet adjacency.

Half-spaces are stored as ``w.x + u >= 0``. Pieces of a decomposition keep
the origin as a vertex; facets through the origin (``u == 0``) are the
"origin facets" that pin the Lyapunov function to zero there.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-9
FACET_MATCH_TOL = 1e-9
ADJACENCY_SAMPLES = 50
ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class AffineForm:
    """Half-space ``w.x + u >= 0``."""

    w: tuple[float, ...]
    u: float

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        if not any(w):
            raise ValueError("affine form needs a nonzero normal")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "u", float(self.u))

    @property
    def dim(self) -> int:
        return len(self.w)

    def __call__(self, x) -> float:
        return float(np.dot(self.w, x) + self.u)

    def normalized(self) -> "AffineForm":
        """Scale so that max |w_j| == 1 (positive scaling keeps the half-space)."""
        s = max(abs(v) for v in self.w)
        return AffineForm(tuple(v / s for v in self.w), self.u / s)

    def negated(self) -> "AffineForm":
        return AffineForm(tuple(-v for v in self.w), -self.u)

    def same_hyperplane(self, other: "AffineForm", tol: float = FACET_MATCH_TOL) -> bool:
        a = np.array(self.w + (self.u,))
        b = np.array(other.w + (other.u,))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        return bool(np.max(np.abs(a - b)) <= tol or np.max(np.abs(a + b)) <= tol)


def _residuals(facets, X: np.ndarray) -> np.ndarray:
    W = np.array([f.w for f in facets])
    U = np.array([f.u for f in facets])
    return np.atleast_2d(X) @ W.T + U


@dataclass(frozen=True)
class Polytope:
    dim: int
    facets: tuple[AffineForm, ...]
    vertices: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "facets", tuple(self.facets))
        object.__setattr__(self, "vertices", tuple(tuple(float(c) for c in v) for v in self.vertices))
        for f in self.facets:
            if f.dim != self.dim:
                raise ValueError("facet dimension mismatch")
        for v in self.vertices:
            if len(v) != self.dim:
                raise ValueError("vertex dimension mismatch")
            if np.min(_residuals(self.facets, np.array(v))) < -FEAS_TOL * max(1.0, np.abs(v).max()):
                raise ValueError(f"vertex {v} violates the facet inequalities")

    @classmethod
    def from_facets(cls, facets, vertices=()) -> "Polytope":
        facets = tuple(f if isinstance(f, AffineForm) else AffineForm(*f) for f in facets)
        return cls(facets[0].dim, facets, tuple(vertices))

    @classmethod
    def hypercube(cls, n: int, a: float = 1.0) -> "Polytope":
        facets = []
        for j in range(n):
            for sgn in (1.0, -1.0):
                w = [0.0] * n
                w[j] = sgn
                facets.append(AffineForm(tuple(w), a))
        verts = tuple(itertools.product((-a, a), repeat=n)) if n <= 12 else ()
        return cls(n, tuple(facets), verts)

    def residuals(self, X) -> np.ndarray:
        return _residuals(self.facets, np.asarray(X, dtype=float))

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return bool(np.min(self.residuals(x)) >= -tol)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.vertices:
            V = np.array(self.vertices)
            return V.min(axis=0), V.max(axis=0)
        return _lp_bounding_box(self.facets, self.dim)

    def area(self) -> float:
        """Shoelace area (2-D, vertices in cyclic order)."""
        if self.dim != 2:
            raise ValueError("area is only implemented in 2-D")
        V = np.array(self.vertices)
        x, y = V[:, 0], V[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _lp_bounding_box(facets, n: int):
    from .lpsolve import solve_standard

    W = np.array([f.w for f in facets])
    U = np.array([f.u for f in facets])
    lo, hi = np.empty(n), np.empty(n)
    # x = xp - xm, W x >= -U  ->  -W xp + W xm <= U
    A_ub = np.hstack([-W, W])
    for j in range(n):
        for sign, target in ((1.0, hi), (-1.0, lo)):
            c = np.zeros(2 * n)
            c[j], c[n + j] = sign, -sign
            res = solve_standard(c, A_ub=A_ub, b_ub=U)
            if res.status != "Optimal":
                raise ValueError("polytope is unbounded or empty")
            target[j] = sign * res.objective
    return lo, hi


def _hull_2d(points: np.ndarray) -> np.ndarray:
    # Andrew's monotone chain; returns counter-clockwise hull without repeats
    pts = sorted(map(tuple, points))
    pts = list(dict.fromkeys(pts))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-12:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-12:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polytope_from_vertices(vertices, facets=None) -> Polytope:
    """H- and V-representation from a vertex list.

    In 1-D and 2-D the hull is computed here; in higher dimensions the caller
    must pass ``facets`` as well. Facet normals are scaled to max-abs 1 and,
    since the origin must be interior, every offset ``u`` is positive. 2-D
    facets come out counter-clockwise.
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    n = V.shape[1]
    if facets is not None:
        P = Polytope.from_facets(facets, [tuple(v) for v in V])
    elif n == 1:
        lo, hi = V.min(), V.max()
        if not lo < 0 < hi:
            raise ValueError("origin must lie strictly inside the polytope")
        P = Polytope(1, (AffineForm((1.0,), -lo).normalized(), AffineForm((-1.0,), hi).normalized()),
                     ((lo,), (hi,)))
    elif n == 2:
        H = _hull_2d(V)
        if len(H) < 3:
            raise ValueError("degenerate vertex set: points are collinear")
        fs = []
        for a, b in zip(H, np.roll(H, -1, axis=0)):
            d = b - a
            w = np.array([-d[1], d[0]])  # left normal; interior is on the left of a CCW edge
            fs.append(AffineForm(tuple(w), -float(w @ a)).normalized())
        P = Polytope(2, tuple(fs), tuple(map(tuple, H)))
    else:
        raise ValueError("supply facets explicitly for dimension >= 3")
    if np.min(P.residuals(np.zeros(n))) <= ORIGIN_TOL:
        raise ValueError("origin must lie strictly inside the polytope")
    return P


def scale_polytope(P: Polytope, s: float) -> Polytope:
    """Homothety about the origin: vertices times s, offsets u times s."""
    if not s > 0:
        raise ValueError("scale factor must be positive")
    return Polytope(
        P.dim,
        tuple(AffineForm(f.w, f.u * s) for f in P.facets),
        tuple(tuple(c * s for c in v) for v in P.vertices),
    )


@dataclass(frozen=True)
class SubPolytope:
    facets: tuple[AffineForm, ...]
    vertices: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "facets", tuple(self.facets))
        object.__setattr__(self, "vertices", tuple(tuple(float(c) for c in v) for v in self.vertices))

    @property
    def dim(self) -> int:
        return self.facets[0].dim

    @property
    def m(self) -> int:
        return len(self.facets)

    @property
    def origin_facet_indices(self) -> frozenset[int]:
        return frozenset(j for j, f in enumerate(self.facets) if abs(f.u) <= ORIGIN_TOL)

    def residuals(self, X) -> np.ndarray:
        return _residuals(self.facets, np.asarray(X, dtype=float))

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return bool(np.min(self.residuals(x)) >= -tol)

    def bounding_box(self):
        if self.vertices:
            V = np.array(self.vertices)
            return V.min(axis=0), V.max(axis=0)
        return _lp_bounding_box(self.facets, self.dim)

    def sample(self, count: int, rng: np.random.Generator, max_batches: int = 200) -> np.ndarray:
        """Uniform samples by rejection from the bounding box."""
        lo, hi = self.bounding_box()
        got = []
        total = 0
        for _ in range(max_batches):
            X = rng.uniform(lo, hi, size=(max(4 * count, 64), self.dim))
            X = X[np.min(self.residuals(X), axis=1) >= 0.0]
            got.append(X)
            total += len(X)
            if total >= count:
                break
        X = np.concatenate(got)[:count]
        if len(X) < count:
            raise RuntimeError("rejection sampling failed; piece may be degenerate")
        return X

    def sample_facet(self, k: int, count: int, rng: np.random.Generator,
                     max_batches: int = 100) -> np.ndarray:
        """Points of facet k (hyperplane k intersected with the piece)."""
        f = self.facets[k]
        w = np.array(f.w)
        ww = float(w @ w)
        if self.dim == 1:
            x = np.array([-f.u / w[0]])
            if self.contains(x):
                return np.repeat(x[None, :], count, axis=0)
            return np.empty((0, 1))
        lo, hi = self.bounding_box()
        got = []
        total = 0
        if self.dim == 2 and self.vertices:
            # exact segment: the stored vertices lying on the line
            V = np.array(self.vertices)
            on = V[np.abs(V @ w + f.u) <= 1e-9 * max(1.0, np.abs(V).max())]
            if len(on) >= 2:
                t = rng.uniform(0.0, 1.0, size=(count, 1))
                return on[0] + t * (on[-1] - on[0])
        for _ in range(max_batches):
            X = rng.uniform(lo, hi, size=(max(4 * count, 64), self.dim))
            X = X - np.outer((X @ w + f.u) / ww, w)
            R = self.residuals(X)
            R[:, k] = 0.0
            X = X[np.min(R, axis=1) >= -1e-12]
            got.append(X)
            total += len(X)
            if total >= count:
                break
        X = np.concatenate(got) if got else np.empty((0, self.dim))
        return X[:count]


@dataclass(frozen=True)
class DDecomposition:
    pieces: tuple[SubPolytope, ...]
    adjacency: frozenset[tuple[int, int, int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "adjacency", frozenset(self.adjacency))
        for i, j, k, l in self.adjacency:
            if not (0 <= i < j < len(self.pieces)):
                raise ValueError(f"bad adjacency tuple {(i, j, k, l)}")
            if not (0 <= k < self.pieces[i].m and 0 <= l < self.pieces[j].m):
                raise ValueError(f"facet index out of range in {(i, j, k, l)}")

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def __len__(self):
        return len(self.pieces)


def star_decompose(P: Polytope) -> DDecomposition:
    """Fan triangulation: one triangle conv{0, v_a, v_b} per edge of a 2-D polytope.

    Facet order per triangle is (outer edge, ray through v_a, ray through v_b),
    with v_a -> v_b counter-clockwise.
    """
    if P.dim != 2:
        raise ValueError("star decomposition is implemented for 2-D polytopes only")
    if not P.vertices:
        raise ValueError("star decomposition needs the vertex list")
    if np.min(P.residuals(np.zeros(2))) <= ORIGIN_TOL:
        raise ValueError("origin must lie strictly inside the polytope")
    V = _hull_2d(np.array(P.vertices))
    K = len(V)
    pieces = []
    for i in range(K):
        a, b = V[i], V[(i + 1) % K]
        d = b - a
        w = np.array([-d[1], d[0]])
        outer = AffineForm(tuple(w), -float(w @ a)).normalized()
        ray_a = AffineForm((-a[1], a[0]), 0.0).normalized()
        ray_b = AffineForm((b[1], -b[0]), 0.0).normalized()
        pieces.append(SubPolytope((outer, ray_a, ray_b), ((0.0, 0.0), tuple(a), tuple(b))))
    adjacency = set()
    for i in range(K):
        j = (i + 1) % K
        adjacency.add((i, j, 2, 1) if i < j else (j, i, 1, 2))
    return DDecomposition(tuple(pieces), frozenset(adjacency))


def is_hypercube(P: Polytope, tol: float = 1e-12) -> float | None:
    """Half-width a if P is [-a, a]^n, else None."""
    n = P.dim
    if len(P.facets) != 2 * n:
        return None
    seen = set()
    a = None
    for f in P.facets:
        g = f.normalized()
        nz = [j for j, v in enumerate(g.w) if abs(v) > tol]
        if len(nz) != 1:
            return None
        j = nz[0]
        if abs(abs(g.w[j]) - 1.0) > tol:
            return None
        if a is None:
            a = g.u
        elif abs(g.u - a) > tol * max(1.0, abs(a)):
            return None
        seen.add((j, g.w[j] > 0))
    if len(seen) != 2 * n or a is None or a <= 0:
        return None
    return a


def quadrant_decompose(P: Polytope) -> DDecomposition:
    """Split [-a, a]^n into its 2^n orthant boxes.

    Each box has facets (s_1 x_1 >= 0, ..., s_n x_n >= 0, a - s_1 x_1 >= 0, ...).
    Boxes whose sign vectors differ in coordinate j share the x_j = 0 facet.
    """
    a = is_hypercube(P)
    if a is None:
        raise ValueError("orthant decomposition requires an origin-centred hypercube")
    n = P.dim
    signs = list(itertools.product((1.0, -1.0), repeat=n))
    pieces = []
    for sg in signs:
        facets = []
        for j in range(n):
            w = [0.0] * n
            w[j] = sg[j]
            facets.append(AffineForm(tuple(w), 0.0))
        for j in range(n):
            w = [0.0] * n
            w[j] = -sg[j]
            facets.append(AffineForm(tuple(w), a))
        verts = tuple(
            tuple(sg[j] * a * c[j] for j in range(n)) for c in itertools.product((0, 1), repeat=n)
        ) if n <= 12 else ()
        pieces.append(SubPolytope(tuple(facets), verts))
    index = {sg: i for i, sg in enumerate(signs)}
    adjacency = set()
    for i, sg in enumerate(signs):
        for j in range(n):
            other = list(sg)
            other[j] = -other[j]
            i2 = index[tuple(other)]
            if i < i2:
                adjacency.add((i, i2, j, j))
    return DDecomposition(tuple(pieces), frozenset(adjacency))


def facet_adjacency(pieces, samples: int = ADJACENCY_SAMPLES, seed: int = 0,
                    tol: float = FACET_MATCH_TOL) -> frozenset[tuple[int, int, int, int]]:
    """All (i, j, k, l), i < j, where facet k of piece i equals facet l of piece j.

    Hyperplanes must coincide up to sign; set equality is checked by sampling
    each facet and testing membership in the other piece, both ways.
    """
    rng = np.random.default_rng(seed)
    pieces = list(pieces)
    facet_pts: dict[tuple[int, int], np.ndarray] = {}

    def pts(i, k):
        if (i, k) not in facet_pts:
            facet_pts[(i, k)] = pieces[i].sample_facet(k, samples, rng)
        return facet_pts[(i, k)]

    out = set()
    for i, j in itertools.combinations(range(len(pieces)), 2):
        for k, fk in enumerate(pieces[i].facets):
            for l, fl in enumerate(pieces[j].facets):
                if not fk.same_hyperplane(fl, tol):
                    continue
                A, B = pts(i, k), pts(j, l)
                if len(A) == 0 or len(B) == 0:
                    continue
                if np.min(pieces[j].residuals(A)) < -tol or np.min(pieces[i].residuals(B)) < -tol:
                    continue
                # a single shared point (e.g. just the origin) is not a facet unless n = 1
                if pieces[i].dim > 1 and np.ptp(A, axis=0).max() <= tol:
                    continue
                out.add((i, j, k, l))
    return frozenset(out)


def locate_piece(D: DDecomposition, x, tol: float = FEAS_TOL) -> int:
    """Smallest index of a piece containing x."""
    x = np.asarray(x, dtype=float)
    for i, p in enumerate(D.pieces):
        if np.min(p.residuals(x)) >= -tol:
            return i
    raise ValueError(f"point {x.tolist()} lies outside every piece")


def locate_pieces(D: DDecomposition, X: np.ndarray, tol: float = FEAS_TOL) -> np.ndarray:
    """Vectorised :func:`locate_piece`; -1 where no piece contains the point."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(len(X), -1, dtype=int)
    for i in reversed(range(len(D.pieces))):
        inside = np.min(D.pieces[i].residuals(X), axis=1) >= -tol
        out[inside] = i
    return out


SHAPES = {
    "square": [(-1.0, 1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)],
    "parallelogram": [(-1.31, 0.18), (0.56, 1.92), (-0.56, -1.92), (1.31, -0.18)],
    "diamond": [(-1.41, 0.0), (0.0, 1.41), (1.41, 0.0), (0.0, -1.41)],
}


def named_shape(name: str) -> Polytope:
    try:
        return polytope_from_vertices(SHAPES[name])
    except KeyError:
        raise ValueError(f"unknown shape {name!r}; choose from {sorted(SHAPES)}") from None


def decompose(P: Polytope, rule: str) -> DDecomposition:
    if rule == "star":
        return star_decompose(P)
    if rule == "orthant":
        return quadrant_decompose(P)
    raise ValueError(f"unknown decomposition rule {rule!r}")


def default_rule(shape: str) -> str:
    return "orthant" if shape == "square" else "star"
