"""Compare the numba kernels with the pure-numpy fallback.

Times the two hot paths, the first-moment solve and the kernel average, on
random 2D data for a few sizes and checks that both backends agree.

    python3 benchmarks/bench_backends.py --sizes 500,2000,8000 --repeat 3
"""
import argparse
import time

import numpy as np

from kinreg import _accel
from kinreg.kernel import kernel_average
from kinreg.moment import solve_first_moment_batch


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(sizes, dim, repeat, n_queries):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        centers = rng.random((n, dim))
        values = np.sin(4 * centers).sum(axis=1)
        queries = rng.random((n_queries, dim))
        theta = 0.5 * n ** (-2.0 / dim)  # about half the squared spacing
        res = {}
        for backend in ("numba", "numpy"):
            if backend == "numba" and not _accel.HAS_NUMBA:
                continue
            prev = _accel.set_backend(backend)
            try:
                # first call compiles (numba) or warms caches (numpy)
                solve_first_moment_batch(queries[:2], centers, theta)
                kernel_average(queries[:2], centers, values, theta)
                t_solve, corr = _time(lambda: solve_first_moment_batch(queries, centers, theta), repeat)
                t_avg, avg = _time(lambda: kernel_average(queries, centers, values, theta), repeat)
            finally:
                _accel.set_backend(prev)
            res[backend] = (t_solve, t_avg, corr, avg)
        line = {"N": n, "queries": n_queries}
        for b, (ts, ta, _, _) in res.items():
            line[f"{b}_solve_s"] = ts
            line[f"{b}_average_s"] = ta
        if len(res) == 2:
            a, b = res["numba"], res["numpy"]
            ok = a[2].converged & b[2].converged
            line["max_delta_diff"] = float(np.abs(a[2].delta[ok] - b[2].delta[ok]).max(initial=0.0))
            line["max_average_diff"] = float(np.abs(a[3] - b[3]).max())
            line["solve_speedup"] = b[0] / a[0]
            line["average_speedup"] = b[1] / a[1]
        rows.append(line)
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="500,2000,8000", help="comma list of center counts")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = run(sizes, args.dim, args.repeat, args.queries)
    keys = list(rows[0])
    print(" ".join(f"{k:>16}" for k in keys))
    for r in rows:
        print(" ".join(f"{r[k]:>16.4g}" if isinstance(r[k], float) else f"{r[k]:>16}" for k in keys))


if __name__ == "__main__":
    main()
