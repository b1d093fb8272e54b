"""Command-line front end: ``handelyap certify | roa | complexity``.

Exit codes: 0 success, 1 bad input, 2 no certificate found.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import complexity as cx
from .certify import (
    GAMMA_MIN,
    N_FACET_SAMPLES,
    N_SAMPLES,
    dump_certificate,
    search_certificate,
    verify_certificate,
)
from .geometry import SHAPES, default_rule
from .handelman import assemble_lp
from .lpsolve import FEAS_TOL, write_mps
from .problem import Problem, ProblemError, SYSTEMS, load_problem
from .roa import RESOLUTION, NotCertifiable, TOL_S, contour_csv, contour_svg, level_set, maximize_scale

EXIT_OK, EXIT_INPUT, EXIT_NOT_FOUND = 0, 1, 2

METHOD_ALIASES = {
    "handelman": "HandelmanLP",
    "polya": "PolyaSDP",
    "sos": "SOS-Psatz",
    "sos-global": "SOS-global",
}


def _add_solver_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver")
    g.add_argument("--solver", choices=("simplex", "highs"), help="LP engine (default simplex)")
    g.add_argument("--rule", choices=("dantzig", "steepest", "bland"), help="simplex pricing rule")
    g.add_argument("--feas-tol", type=float, help=f"feasibility tolerance (default {FEAS_TOL:g})")
    g.add_argument("--form", choices=("handelman", "coefficient"), help="LP form (default handelman)")
    g.add_argument("--gamma-cap", type=float, help="upper bound on gamma (default 1)")
    g.add_argument("--gamma-min", type=float, help=f"smallest accepted gamma (default {GAMMA_MIN:g})")


def _problem(args) -> Problem:
    if args.problem is not None:
        prob = load_problem(args.problem)
    elif getattr(args, "system", None):
        prob = Problem(SYSTEMS[args.system]())
    else:
        raise ProblemError("give a problem file or --system")
    for attr in ("form", "gamma_cap", "gamma_min"):
        v = getattr(args, attr, None)
        if v is not None:
            setattr(prob, attr, v)
    if args.solver is not None:
        prob.solver["name"] = args.solver
    if args.rule is not None:
        prob.solver["rule"] = args.rule
    if args.feas_tol is not None:
        prob.solver["feas_tol"] = args.feas_tol
    return prob


def _search_kwargs(prob: Problem) -> dict:
    opts = dict(prob.solver)
    name = opts.pop("name", "simplex")
    if name == "highs":
        opts.pop("rule", None)
        opts.pop("max_iters", None)
    return dict(gamma_cap=prob.gamma_cap, gamma_min=prob.gamma_min, solver=name, form=prob.form, **opts)


def cmd_certify(args) -> int:
    prob = _problem(args)
    if prob.decomposition is None:
        raise ProblemError("certify needs a polytope and a decomposition")
    d_max = args.d_max if args.d_max is not None else prob.d_max
    if args.mps:
        out = Path(args.mps)
        out.mkdir(parents=True, exist_ok=True)
        for d in range(prob.d_min, d_max + 1):
            lp = assemble_lp(prob.decomposition, prob.system, d, prob.gamma_cap, form=prob.form)
            write_mps(lp, out / f"lp_d{d}.mps")
    cert = search_certificate(prob.system, prob.decomposition, d_max, d_min=prob.d_min,
                              polytope=prob.polytope, **_search_kwargs(prob))
    if not cert:
        print("no certificate found")
        for d, s in sorted(cert.statuses.items()):
            print(f"  d={d}: {s} (gamma={cert.gammas.get(d, 0.0):.3g})")
        return EXIT_NOT_FOUND
    samples = args.samples if args.samples is not None else prob.samples
    fsamples = args.facet_samples if args.facet_samples is not None else prob.facet_samples
    seed = args.seed if args.seed is not None else prob.seed
    report = verify_certificate(cert, n_samples=samples, seed=seed, n_facet_samples=fsamples)
    print(f"certificate at degree {cert.degree}, gamma = {cert.gamma:.6g}")
    for line in report.lines():
        print("  " + line)
    Path(args.out).write_text(dump_certificate(cert))
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    return EXIT_OK if report.passed else EXIT_NOT_FOUND


def cmd_roa(args) -> int:
    prob = _problem(args)
    shape = args.shape or prob.shape
    if shape is None:
        raise ProblemError("roa needs --shape or a named polytope shape in the problem file")
    rule = args.rule_decomp or (prob.rule if prob.shape == shape and prob.rule else default_rule(shape))
    try:
        res = maximize_scale(prob.system, shape, rule, args.degree, s_lo=args.s_lo, s_hi=args.s_hi,
                             tol_s=args.tol_s, **_search_kwargs(prob))
    except NotCertifiable as e:
        print(f"no certificate: {e}")
        return EXIT_NOT_FOUND
    for s, ok in res.history:
        print(f"  s={s:.6f} {'feasible' if ok else 'infeasible'}")
    print(f"s* = {res.s_star:.4f} (degree {res.degree}, {shape}, {rule})")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "certificate.json").write_text(dump_certificate(res.certificate))
    summary = {"shape": shape, "rule": rule, "degree": res.degree, "s_star": res.s_star,
               "s_infeasible": res.s_infeasible, "tol_s": args.tol_s,
               "history": [[s, ok] for s, ok in res.history]}
    if res.certificate.dim == 2:
        ls = level_set(res.certificate, resolution=args.resolution)
        summary["c_star"] = ls.c_star
        summary["containment_margin"] = ls.containment_margin
        (out / "contour.csv").write_text(contour_csv(ls.contour))
        (out / "contour.svg").write_text(contour_svg(res.certificate, ls.contour))
        print(f"c* = {ls.c_star:.6g}")
    (out / "scale.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_complexity(args) -> int:
    methods = [METHOD_ALIASES.get(m, m) for m in args.method] if args.method else list(cx.METHODS)
    for m in methods:
        if m not in cx.METHODS:
            raise ProblemError(f"unknown method {m!r}")
    strict = not args.floor_parity
    reports = []
    for m in methods:
        for n in args.n:
            for dv in args.dv:
                for df in args.df:
                    reports.append(cx.size_report(m, n, dv, df, e=args.e, K=args.K, strict=strict))
    text = cx.to_csv(reports)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="handelyap", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="search for a certificate on a fixed region")
    c.add_argument("problem", nargs="?", help="problem file (JSON)")
    c.add_argument("--d-max", type=int, help="largest degree to try")
    c.add_argument("--out", default="certificate.json")
    c.add_argument("--report", help="write the verification report here")
    c.add_argument("--samples", type=int, help=f"interior samples per piece (default {N_SAMPLES})")
    c.add_argument("--facet-samples", type=int, help=f"samples per shared facet (default {N_FACET_SAMPLES})")
    c.add_argument("--seed", type=int)
    c.add_argument("--mps", help="also write each degree's LP as MPS into this directory")
    _add_solver_flags(c)
    c.set_defaults(func=cmd_certify)

    r = sub.add_parser("roa", help="maximise the scaling of a template region")
    r.add_argument("problem", nargs="?", help="problem file (JSON)")
    r.add_argument("--system", choices=sorted(SYSTEMS), help="built-in system instead of a file")
    r.add_argument("--shape", choices=sorted(SHAPES))
    r.add_argument("--decomposition", dest="rule_decomp", choices=("star", "orthant"))
    r.add_argument("--degree", type=int, default=8)
    r.add_argument("--tol-s", type=float, default=TOL_S)
    r.add_argument("--s-lo", type=float, default=1.0)
    r.add_argument("--s-hi", type=float, default=2.0)
    r.add_argument("--resolution", type=int, default=RESOLUTION)
    r.add_argument("--out-dir", default="roa_out")
    _add_solver_flags(r)
    r.set_defaults(func=cmd_roa)

    x = sub.add_parser("complexity", help="LP/SDP size table")
    x.add_argument("--method", action="append", choices=sorted(METHOD_ALIASES) + list(cx.METHODS))
    x.add_argument("--n", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    x.add_argument("--dv", type=int, nargs="+", default=[2, 4, 6])
    x.add_argument("--df", type=int, nargs="+", default=[2, 4])
    x.add_argument("--e", type=int, default=1, help="Polya exponent")
    x.add_argument("--K", type=int, help="number of facets for SOS-Psatz (default 2n)")
    x.add_argument("--floor-parity", action="store_true",
                   help="round odd SOS half-degrees down instead of failing")
    x.add_argument("--out", help="CSV path (default stdout)")
    x.set_defaults(func=cmd_complexity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
