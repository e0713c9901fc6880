"""Time the numba and numpy paths of every hot kernel and check they agree.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from bo2d import kernels


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rng = np.random.default_rng(1)
    for n in (2048, 8192):
        f = rng.standard_normal(n)
        k = kernels.stein_cell_kernel(n, 0.01, 0.5)
        yield f"stein_sum n={n}", lambda f=f, k=k, u=None: kernels.stein_sum(f, k, u)
    for n in (2048, 8192):
        f = rng.standard_normal(n)
        yield f"pv_hilbert n={n}", lambda f=f, u=None: kernels.pv_hilbert(f, u)
    for R, C in ((3, 20), (3, 33)):
        shape = (2 * R + 1, 2 * R + 1, 2 * C + 1)
        fs = [np.abs(rng.standard_normal(shape)) * (rng.random(shape) < 0.3) for _ in range(3)]
        yield f"triple_convolution {shape}", lambda fs=fs, u=None: kernels.triple_convolution(*fs, u)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path can run")
        return
    print(f"{'kernel':<34}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max rel diff':>15}")
    for name, fn in cases():
        fn(u=True)  # compile outside the timing
        tn, a = best_of(lambda: fn(u=True), args.repeat)
        tp, b = best_of(lambda: fn(u=False), args.repeat)
        a, b = np.asarray(a), np.asarray(b)
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
        print(f"{name:<34}{tn:>12.4g}{tp:>12.4g}{tp / tn:>10.1f}{diff:>15.2e}")


if __name__ == "__main__":
    main()
