#!/usr/bin/env python3
"""Benchmark the JIT-compiled kernels against the interpreted fallback.

Runs the point-dedup and conjugate-gradient kernels on representative
workloads in both modes and prints the timings side by side.  When numba is
disabled (``FRACLAP_NUMBA=0``) only the interpreted path exists, so both
columns coincide.

Usage: python benchmarks/bench_kernels.py [--scale N]
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

from fraclap.jit import NUMBA_ENABLED
from fraclap.kernels import _cg_core, _dedup_core


def timed(fn, *args, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def dedup_workload(scale):
    rng = np.random.default_rng(0)
    n_clusters = 20_000 * scale
    centers = rng.uniform(-1.0, 1.0, size=(n_clusters, 2))
    pts = np.repeat(centers, 3, axis=0)
    pts += rng.uniform(-1e-10, 1e-10, size=pts.shape)
    return np.ascontiguousarray(rng.permutation(pts)), 1e-6


def cg_workload(scale):
    side = 60 * scale
    grid = sp.eye(side**2) + sp.kronsum(*([sp.diags([-1, 2, -1], [-1, 0, 1],
                                                    shape=(side, side))] * 2))
    csr = grid.tocsr()
    rng = np.random.default_rng(1)
    b = rng.normal(size=side**2)
    return csr, b


def run_dedup(fn, pts, tol):
    return fn(pts, tol)


def run_cg(fn, csr, b):
    x = np.zeros(b.size)
    return fn(csr.indptr, csr.indices, np.ascontiguousarray(csr.data), b, x,
              1e-10, 10 * b.size)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scale", type=int, default=1,
                        help="workload multiplier (default 1)")
    args = parser.parse_args()

    pts, tol = dedup_workload(args.scale)
    csr, b = cg_workload(args.scale)

    cases = [
        (f"dedup {pts.shape[0]} pts", run_dedup, (pts, tol)),
        (f"cg {b.size} unknowns", run_cg, (csr, b)),
    ]

    mode = "numba" if NUMBA_ENABLED else "interpreted only (FRACLAP_NUMBA=0)"
    print(f"kernel mode: {mode}")
    header = f"{'workload':<28}{'interpreted':>14}{'jitted':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, runner, payload in cases:
        kernel = _dedup_core if runner is run_dedup else _cg_core
        plain = getattr(kernel, "py_func", kernel)
        if NUMBA_ENABLED:
            runner(kernel, *payload)  # warm-up compile
        t_plain, _ = timed(runner, plain, *payload, repeats=1)
        t_jit, _ = timed(runner, kernel, *payload)
        speed = t_plain / t_jit if t_jit > 0 else float("inf")
        print(f"{name:<28}{t_plain:>12.4f} s{t_jit:>12.4f} s{speed:>9.1f}x")


if __name__ == "__main__":
    main()
