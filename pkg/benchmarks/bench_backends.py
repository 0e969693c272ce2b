"""Timing comparison of the projected-descent kernels.

Runs the same fixed-budget minimization on the numba and numpy backends
and prints per-iteration timings. The numba path gets one warm-up call
so JIT compilation is not billed to the measured run. By default a small
suite of sizes is timed; pass --n/--k/--m to time a single instance.
Small instances are loop-bound and favor numba heavily, large ones are
matmul-bound and the two backends tie.

Usage: python3 benchmarks/bench_backends.py [--n N --k K --m M] [--iters I]
"""

import argparse
import time

import numpy as np

from ncmd._kernels import HAS_NUMBA, pgd_minimize
from ncmd.losses import LossParams, _smoothed_targets


def _instance(n, k, m, seed):
    rng = np.random.default_rng(seed)
    W0 = rng.normal(scale=0.1, size=(n, m))
    H0 = np.abs(rng.normal(scale=0.1, size=(m, n * k)))
    Y = _smoothed_targets(n, k, 0.1)
    return W0, H0, Y


def _run(backend, W0, H0, Y, lp, iters):
    t0 = time.perf_counter()
    W, H, obj, pg, steps, conv = pgd_minimize(
        W0.copy(), H0.copy(), Y, lp.lambda_w, lp.lambda_h / (H0.shape[1] // Y.shape[0]),
        max_iter=iters, tol_grad=0.0, tol_obj=0.0, backend=backend)
    dt = time.perf_counter() - t0
    return dt, obj, steps


def _bench_one(n, k, m, iters, seed):
    lp = LossParams(alpha=0.1, lambda_w=2.5e-3, lambda_h=2.5e-3)
    W0, H0, Y = _instance(n, k, m, seed)
    print(f"instance: N={n} K={k} M={m}, {iters} iterations")

    results = {}
    dt, obj, steps = _run("numpy", W0, H0, Y, lp, iters)
    results["numpy"] = (dt, obj, steps)

    if HAS_NUMBA:
        _run("numba", W0, H0, Y, lp, 5)  # warm-up, triggers compilation
        dt, obj, steps = _run("numba", W0, H0, Y, lp, iters)
        results["numba"] = (dt, obj, steps)
    else:
        print("numba not installed, timing numpy only")

    print(f"{'backend':<8} {'total s':>10} {'us/iter':>10} {'objective':>16}")
    for name, (dt, obj, steps) in results.items():
        print(f"{name:<8} {dt:>10.3f} {1e6 * dt / max(steps, 1):>10.1f} {obj:>16.10f}")
    if "numba" in results:
        speedup = results["numpy"][0] / results["numba"][0]
        d_obj = abs(results["numpy"][1] - results["numba"][1])
        print(f"speedup: {speedup:.2f}x, objective agreement: {d_obj:.3e}")
    print()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=None)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--m", type=int, default=None)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.n is not None:
        _bench_one(args.n, args.k, args.m if args.m is not None else args.n,
                   args.iters, args.seed)
        return
    for n, k, m, iters in [(2, 1, 2, args.iters), (4, 2, 4, args.iters),
                           (10, 50, 12, max(args.iters // 5, 1))]:
        _bench_one(n, k, m, iters, args.seed)


if __name__ == "__main__":
    main()
