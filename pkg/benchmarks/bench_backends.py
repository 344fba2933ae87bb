"""Compare the compiled core with the pure Python fallback.

Times, per backend:

* Kendall numerator of one pair (merge-sort inversion count),
* Kendall U-statistics of all pairs through the per-pair route,
* the Hoeffding D enumeration of one pair (loop-bound, order 5),

plus the dense BLAS route for all Kendall pairs, which both backends share.

Usage: python benchmarks/bench_backends.py [--sizes 50,200,1000] [--p 40] [--repeat 3]
"""

import argparse
import time

import numpy as np

from relind import _backend, ustat
from relind.kernels import KernelId


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--sizes", default="50,200,1000", help="comma-separated sample sizes")
    ap.add_argument("--p", type=int, default=40, help="columns for the all-pairs timings")
    ap.add_argument("--hoeffding-n", type=int, default=25, help="n for the order-5 enumeration")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",")]
    names = _backend.available()
    rng = np.random.default_rng(0)
    print(f"backends: {', '.join(names)}; best of {args.repeat}")
    print(f"{'case':<34}{'n':>6}" + "".join(f"{b:>14}" for b in names) + f"{'speedup':>10}")

    def row(case, n, timings):
        cells = "".join(f"{t * 1e3:>12.3f}ms" for t in timings)
        speed = f"{timings[-1] / timings[0]:>9.1f}x" if len(timings) > 1 else ""
        print(f"{case:<34}{n:>6}{cells}{speed}")

    for n in sizes:
        u, v = rng.normal(size=(2, n))
        row("kendall_num, one pair", n,
            [best_of(lambda be=_backend.get(b): be.kendall_num(u, v), args.repeat) for b in names])
        x = rng.normal(size=(n, args.p))
        row(f"kendall all pairs, pair route p={args.p}", n, [
            best_of(lambda b=b: ustat.ustat_matrix(x, "kendall", sigma2=False, backend=b,
                                                  route="pair"), args.repeat)
            for b in names
        ])
        if ustat.KendallResampler.fits(n, args.p):
            t = best_of(lambda: ustat.ustat_matrix(x, "kendall", sigma2=False, route="dense"),
                        args.repeat)
            print(f"{f'kendall all pairs, dense route p={args.p}':<34}{n:>6}{t * 1e3:>12.3f}ms"
                  "  (shared BLAS)")

    n = args.hoeffding_n
    u, v = rng.normal(size=(2, n))
    code = KernelId.HOEFFDING_D.code
    row("hoeffding-d enumeration, one pair", n,
        [best_of(lambda be=_backend.get(b): be.enum_sums(u, v, code), 1) for b in names])


if __name__ == "__main__":
    main()
