"""Wall-clock comparison of the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from ptl import _nb, _np
from ptl.model import dimer_spec, sample_realization


def _best(fn, repeat):
    fn()  # warm-up (compilation for numba)
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def cases(r):
    o, N = r.window, r.window
    z = 0.5 + 1e-3j
    cps = np.array([N // 10, N], dtype=np.int64)
    B = 128
    zr = np.linspace(-1.5, 1.5, B)
    zi = np.full(B, 1e-3)
    R = 4096
    W = np.ones((4, R + 1))
    W[:, 0] = 0.0
    vr, tr = np.ascontiguousarray(r.v[o:]), np.ascontiguousarray(r.t[o:])
    X = _nb.hyperboloid_points(z, r.v, r.t, o, 2000, 8.0)[0]
    return {
        "chain_product N=1e5": lambda m: m.chain_product(z, r.v, r.t, o, o + N),
        "running_log_norms N=1e5": lambda m: m.running_log_norms(z, r.v, r.t, o, N, 1),
        "vector_growth N=1e5": lambda m: m.vector_growth(z, r.v, r.t, o, cps, 1.0, 0.0, 1),
        "pair_max_exceeds n=2000": lambda m: m.pair_max_exceeds(X, 8.0),
        "max_pair_log_norm n=300": lambda m: m.max_pair_log_norm(z, r.v, r.t, o, 300),
        "side_sums R=4096 B=128": lambda m: m.side_sums(zr, zi, vr, tr, R, W, R // 2, R // 4),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    r = sample_realization(dimer_spec(0.5), 1, 0, 100_000)
    print(f"{'kernel':28s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for name, f in cases(r).items():
        tn = _best(lambda: f(_nb), args.repeat)
        tp = _best(lambda: f(_np), args.repeat)
        print(f"{name:28s} {tn:12.4g} {tp:12.4g} {tp / tn:9.1f}")


if __name__ == "__main__":
    main()
