"""Largest certifiable scaling of a template polytope, and inscribed level sets."""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from skimage.measure import find_contours

from .certify import Certificate, NotFound, search_certificate
from .geometry import ORIGIN_TOL, Polytope, decompose, locate_pieces, named_shape, scale_polytope
from .poly import VectorField, poly_eval_many

log = logging.getLogger(__name__)

TOL_S = 5e-3
S_MIN = 1e-3
MAX_DOUBLINGS = 12
BOUNDARY_SAMPLES = 1000
GOLDEN_TOL = 1e-6
RESOLUTION = 400


class NotCertifiable(ValueError):
    """No certificate at the smallest scale tried."""


@dataclass
class ScaleResult:
    s_star: float
    certificate: Certificate
    history: list[tuple[float, bool]]
    degree: int
    s_infeasible: float | None = None


def _shape(shape) -> Polytope:
    return named_shape(shape) if isinstance(shape, str) else shape


def certify_at_scale(f: VectorField, shape, rule: str, d: int, s: float, **search) -> Certificate | NotFound:
    """Fixed-degree certificate search on ``scale_polytope(shape, s)``."""
    P = scale_polytope(_shape(shape), s)
    return search_certificate(f, decompose(P, rule), d, d_min=d, polytope=P, **search)


def maximize_scale(f: VectorField, shape, rule: str, d: int, s_lo: float = 1.0, s_hi: float = 2.0,
                   tol_s: float = TOL_S, **search) -> ScaleResult:
    """Bisection on s; a probe is feasible when the degree-d LP yields a certificate.

    s_lo is halved until feasible (down to S_MIN) and s_hi doubled until
    infeasible, so the bracket need not be right on entry.
    """
    if not 0 < s_lo < s_hi:
        raise ValueError("need 0 < s_lo < s_hi")
    if tol_s <= 0:
        raise ValueError("tol_s must be positive")
    history: list[tuple[float, bool]] = []

    def probe(s):
        cert = certify_at_scale(f, shape, rule, d, s, **search)
        history.append((s, bool(cert)))
        log.info("s=%.6g %s", s, "feasible" if cert else "infeasible")
        return cert

    best = probe(s_lo)
    hi_cert = None
    while not best:
        if s_lo / 2 < S_MIN:
            raise NotCertifiable(f"no certificate at degree {d} even at scale {s_lo:g}")
        s_hi, s_lo = s_lo, s_lo / 2
        hi_cert = best
        best = probe(s_lo)
    if hi_cert is None:
        hi_cert = probe(s_hi)
    for _ in range(MAX_DOUBLINGS):
        if not hi_cert:
            break
        best, s_lo = hi_cert, s_hi
        s_hi *= 2
        hi_cert = probe(s_hi)
    else:
        raise ValueError(f"still certifiable at scale {s_hi:g}; the region looks unbounded")
    while s_hi - s_lo > tol_s:
        mid = 0.5 * (s_lo + s_hi)
        cert = probe(mid)
        if cert:
            s_lo, best = mid, cert
        else:
            s_hi = mid
    return ScaleResult(s_lo, best, history, d, s_hi)


# level sets ---------------------------------------------------------------

def _outer_facets(cert: Certificate):
    for i, p in enumerate(cert.pieces):
        for k, fk in enumerate(p.polytope.facets):
            if abs(fk.u) > ORIGIN_TOL:
                yield i, k


def _segment(piece, k):
    f = piece.facets[k]
    V = np.array(piece.vertices)
    on = V[np.abs(V @ np.array(f.w) + f.u) <= 1e-9 * max(1.0, np.abs(V).max())]
    return (on[0], on[-1]) if len(on) >= 2 else None


def level_set_radius(cert: Certificate, samples: int = BOUNDARY_SAMPLES, tol: float = GOLDEN_TOL,
                     seed: int = 0) -> float:
    """min of V over the outer boundary of the certified region.

    In 2-D each outer edge is sampled on a uniform grid and the best sample
    refined on the neighbouring interval by bounded golden-section
    (Brent) search. Other dimensions use seeded random facet
    samples without refinement.
    """
    best = np.inf
    rng = np.random.default_rng(seed)
    for i, k in _outer_facets(cert):
        piece = cert.pieces[i].polytope
        V = cert.pieces[i].V
        seg = _segment(piece, k) if cert.dim == 2 and piece.vertices else None
        if seg is None:
            X = piece.sample_facet(k, samples, rng)
            if len(X):
                best = min(best, float(poly_eval_many(V, X).min()))
            continue
        a, b = seg
        t = np.linspace(0.0, 1.0, samples)
        vals = poly_eval_many(V, a + t[:, None] * (b - a))
        j = int(np.argmin(vals))
        best = min(best, float(vals[j]))
        lo, hi = t[max(j - 1, 0)], t[min(j + 1, samples - 1)]

        def g(s):
            return float(poly_eval_many(V, (a + s * (b - a))[None, :])[0])
        res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": tol})
        best = min(best, float(res.fun))
    return best


@dataclass
class Contour:
    level: float
    polylines: list[np.ndarray]
    pieces: list[np.ndarray] = field(default_factory=list)
    empty: bool = False


def _grid(cert: Certificate, resolution: int):
    if cert.dim != 2:
        raise ValueError("contours are only available in 2-D")
    if cert.polytope is not None and cert.polytope.vertices:
        lo, hi = cert.polytope.bounding_box()
    else:
        boxes = [p.polytope.bounding_box() for p in cert.pieces]
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    XX, YY = np.meshgrid(xs, ys)
    P = np.column_stack([XX.ravel(), YY.ravel()])
    idx = locate_pieces(cert.decomposition, P, 1e-12)
    Z = np.full(len(P), np.nan)
    for i, p in enumerate(cert.pieces):
        sel = idx == i
        if np.any(sel):
            Z[sel] = poly_eval_many(p.V, P[sel])
    return xs, ys, Z.reshape(XX.shape), idx.reshape(XX.shape)


def extract_contour(cert: Certificate, c: float, resolution: int = RESOLUTION) -> Contour:
    """Marching-squares polylines of {V = c} on a grid over the region, masked to it."""
    xs, ys, Z, idx = _grid(cert, resolution)
    inside = idx >= 0
    if not np.any(inside) or c <= np.nanmin(Z):
        return Contour(c, [], [], True)
    raw = find_contours(np.where(inside, Z, np.nan), level=c, mask=inside)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    lines, owners = [], []
    for rc in raw:
        xy = np.column_stack([xs[0] + rc[:, 1] * dx, ys[0] + rc[:, 0] * dy])
        lines.append(xy)
        owners.append(locate_pieces(cert.decomposition, xy, 1e-9))
    return Contour(c, lines, owners, not lines)


def sublevel_area(cert: Certificate, c: float, resolution: int = RESOLUTION) -> float:
    """Grid-count estimate of the area of {x in region : V(x) <= c}."""
    xs, ys, Z, _ = _grid(cert, resolution)
    cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
    return float(np.count_nonzero(np.nan_to_num(Z, nan=np.inf) <= c) * cell)


@dataclass
class LevelSet:
    c_star: float
    contour: Contour
    containment_margin: float


def level_set(cert: Certificate, resolution: int = RESOLUTION, samples: int = BOUNDARY_SAMPLES) -> LevelSet:
    c = level_set_radius(cert, samples)
    cont = extract_contour(cert, c, resolution)
    region = cert.polytope
    margin = np.inf
    for xy in cont.polylines:
        if region is not None:
            margin = min(margin, float(region.residuals(xy).min()))
        else:
            R = np.max([p.polytope.residuals(xy).min(axis=1) for p in cert.pieces], axis=0)
            margin = min(margin, float(R.min()))
    return LevelSet(c, cont, margin if np.isfinite(margin) else 0.0)


# export -------------------------------------------------------------------

def contour_csv(contour: Contour) -> str:
    buf = io.StringIO()
    buf.write("x,y,piece\n")
    for xy, own in zip(contour.polylines, contour.pieces):
        for (x, y), p in zip(xy, own):
            buf.write(f"{x!r},{y!r},{int(p)}\n")
    return buf.getvalue()


def contour_svg(cert: Certificate, contours, size: int = 480, margin: float = 0.05) -> str:
    """Standalone SVG: region outline, piece boundaries and one path per polyline."""
    if isinstance(contours, Contour):
        contours = [contours]
    boxes = [p.polytope.bounding_box() for p in cert.pieces]
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    span = float(max(hi - lo)) * (1 + 2 * margin)
    org = lo - span * margin / (1 + 2 * margin)

    def pt(x, y):
        return f"{(x - org[0]) / span * size:.3f},{(org[1] + span - y) / span * size:.3f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for p in cert.pieces:
        verts = np.array(p.polytope.vertices)
        c = verts.mean(axis=0)
        order = np.argsort(np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0]))
        pts = " ".join(pt(*v) for v in verts[order])
        out.append(f'<polygon points="{pts}" fill="none" stroke="#bbbbbb" stroke-width="0.8"/>')
    if cert.polytope is not None and cert.polytope.vertices:
        pts = " ".join(pt(*v) for v in cert.polytope.vertices)
        out.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    for n, cont in enumerate(contours):
        for xy in cont.polylines:
            pts = " ".join(pt(x, y) for x, y in xy)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{palette[n % len(palette)]}" '
                       f'stroke-width="1.2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
