"""Compiled vs pure-Python simplex kernels on the assembled certificate LPs.

    python benchmarks/bench_kernels.py --degrees 2 4 6 --repeat 3

Both kernels must pivot identically; the script checks that the bases match.
"""
import argparse
import time

from handelyap.geometry import decompose, named_shape, scale_polytope
from handelyap.handelman import assemble_lp
from handelyap.lpsolve import kernels, solve
from handelyap.poly import van_der_pol


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--shape", default="parallelogram")
    p.add_argument("--scale", type=float, default=1.5)
    p.add_argument("--degrees", type=int, nargs="+", default=[2, 4, 6])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    try:
        kernels("compiled")
    except ImportError:
        raise SystemExit("compiled kernel not built; reinstall with cython available")

    D = decompose(scale_polytope(named_shape(args.shape), args.scale), "star")
    print(f"{'d':>3} {'vars':>6} {'rows':>6} {'iters':>7} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for d in args.degrees:
        lp = assemble_lp(D, van_der_pol(), d)
        tc, a = best_of(lambda: solve(lp, backend="compiled"), args.repeat)
        tp, b = best_of(lambda: solve(lp, backend="python"), args.repeat)
        if a.basis != b.basis or a.status != b.status:
            raise SystemExit(f"d={d}: kernels disagree ({a.status} vs {b.status})")
        print(f"{d:>3} {lp.num_vars:>6} {lp.num_eq + lp.num_ub:>6} {a.iterations:>7} "
              f"{tc:>11.3f} {tp:>10.3f} {tp / tc:>7.2f}x")


if __name__ == "__main__":
    main()
