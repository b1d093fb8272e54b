"""Problem-size formulas for the Handelman LP and the Polya / SOS SDPs on a hypercube.

All counts are exact integers. ``flop_estimate`` evaluates the leading-order
interior-point cost expressions as written, so it is only meaningful for
comparing methods at the same (n, d_V, d_f).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import comb
from typing import Iterable

METHODS = ("HandelmanLP", "PolyaSDP", "SOS-Psatz", "SOS-global")
CSV_HEADER = ("method", "n", "dV", "df", "e", "K", "n_vars", "n_cons")


def basis_size(d: int, k: int) -> int:
    """sum_{i=0}^{d} C(i+k-1, k-1): number of exponents in k variables of degree <= d."""
    if d < 0:
        return 0
    return sum(comb(i + k - 1, k - 1) for i in range(d + 1))


def _monomials_between(lo: int, hi: int, n: int) -> int:
    return sum(comb(i + n - 1, n - 1) for i in range(lo, hi + 1))


@dataclass(frozen=True)
class SizeReport:
    method: str
    n: int
    d_V: int
    d_f: int
    e: int
    K: int
    n_vars: int
    n_cons: int
    flop_estimate: float

    def row(self) -> tuple:
        return (self.method, self.n, self.d_V, self.d_f, self.e, self.K, self.n_vars, self.n_cons)


def _check_positive(**kw):
    for k, v in kw.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{k} must be a positive integer, got {v!r}")


def handelman_counts_general(L: int, m: int, n: int, d_V: int, d_f: int) -> tuple[int, int]:
    """Variable and constraint counts for L pieces of m facets each."""
    n_vars = L * (basis_size(d_V, m) + basis_size(d_V + d_f - 1, m) - (d_V + 1))
    n_cons = n_vars + L * (basis_size(d_V, n) + basis_size(d_V + d_f - 1, n))
    return n_vars, n_cons


def handelman_counts(n: int, d_V: int, d_f: int) -> tuple[int, int]:
    """Hypercube split into L = 2n pyramids with m = 2n - 1 facets each."""
    _check_positive(n=n, d_V=d_V, d_f=d_f)
    return handelman_counts_general(2 * n, 2 * n - 1, n, d_V, d_f)


def polya_counts(n: int, d_V: int, d_f: int, e: int) -> tuple[int, int]:
    _check_positive(n=n, d_f=d_f)
    if d_V < 2:
        raise ValueError("Polya counts need d_V >= 2 (V = x^T P(x) x)")
    if e < 0:
        raise ValueError("Polya exponent e must be >= 0")
    tri = n * (n + 1) // 2
    n_vars = tri * basis_size(d_V - 2, n)
    n_cons = tri * ((d_V + e - 1) ** n + (d_V + d_f + e - 2) ** n)
    return n_vars, n_cons


def _half(deg: int, strict: bool, what: str) -> int:
    if deg % 2:
        if strict:
            raise ValueError(f"SOS counts need {what} = {deg} to be even")
        return (deg - 1) // 2
    return deg // 2


def sos_sizes(n: int, d_V: int, d_f: int, strict: bool = True) -> tuple[int, int, int, int]:
    """N_1..N_4. With strict=False odd degrees are halved downwards."""
    _check_positive(n=n, d_V=d_V, d_f=d_f)
    h1 = _half(d_V, strict, "d_V")
    h4 = _half(d_V + d_f, strict, "d_V + d_f")
    N1 = _monomials_between(1, h1, n)
    N2 = _monomials_between(0, _half(d_V - 2, strict, "d_V - 2"), n)
    N3 = _monomials_between(0, _half(d_V + d_f - 2, strict, "d_V + d_f - 2"), n)
    N4 = _monomials_between(0, h4, n)
    return N1, N2, N3, N4


def sos_counts(n: int, d_V: int, d_f: int, K: int, strict: bool = True) -> tuple[int, int]:
    """K = 0 gives the global SOS program without multipliers."""
    if K < 0:
        raise ValueError("K must be >= 0")
    N1, N2, N3, N4 = sos_sizes(n, d_V, d_f, strict)
    n_vars = N1 * (N1 + 1) // 2 + K * N2 * (N2 + 1) // 2 + K * N3 * (N3 + 1) // 2
    n_cons = N1 + K * N2 + K * N3 + N4
    return n_vars, n_cons


def flop_estimate(method: str, n: int, d_V: int, d_f: int, e: int = 0) -> float:
    s = d_V + d_f
    if method == "HandelmanLP":
        return float(n) ** (3 * s)
    if method == "PolyaSDP":
        return float(s + e - 2) ** (3 * n)
    if method == "SOS-Psatz":
        return float(n) ** (3.5 * s - 3)
    if method == "SOS-global":
        return float(n) ** (1.5 * s) + float(n) ** (2 * d_V + d_f)
    raise ValueError(f"unknown method {method!r}")


def size_report(method: str, n: int, d_V: int, d_f: int, e: int = 1, K: int | None = None,
                strict: bool = True) -> SizeReport:
    if method == "HandelmanLP":
        nv, nc = handelman_counts(n, d_V, d_f)
        K = 2 * n
    elif method == "PolyaSDP":
        nv, nc = polya_counts(n, d_V, d_f, e)
        K = 2 * n
    elif method == "SOS-Psatz":
        K = 2 * n if K is None else K
        nv, nc = sos_counts(n, d_V, d_f, K, strict)
    elif method == "SOS-global":
        K = 0
        nv, nc = sos_counts(n, d_V, d_f, 0, strict)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return SizeReport(method, n, d_V, d_f, e, K, nv, nc, flop_estimate(method, n, d_V, d_f, e))


def compare_table(ns: Iterable[int], d_Vs: Iterable[int], d_fs: Iterable[int], e: int = 1,
                  methods: Iterable[str] = METHODS, strict: bool = False) -> list[SizeReport]:
    """One report per (method, n, d_V, d_f), K = 2n facets.

    SOS rows with odd half-degrees are floored unless strict is set, since
    sweeps over d_f mix parities.
    """
    ns, d_Vs, d_fs, methods = list(ns), list(d_Vs), list(d_fs), list(methods)
    if not (ns and d_Vs and d_fs and methods):
        raise ValueError("empty parameter grid")
    out = []
    for method in methods:
        for n in ns:
            for dv in d_Vs:
                for df in d_fs:
                    out.append(size_report(method, n, dv, df, e=e, strict=strict))
    return out


def to_csv(reports: Iterable[SizeReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()
