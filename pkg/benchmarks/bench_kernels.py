"""Benchmark the Gaussian log-density kernel backends.

The kernel is the hot inner loop of EM fitting and every density
evaluation. This compares the compiled extension against the pure-numpy
fallback on EM-shaped workloads.

Run:  python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np
from scipy.linalg import cholesky

from psm.density import _kernels_py

try:
    from psm import _ckernels
except ImportError:
    _ckernels = None


def make_case(n, d, K, seed=0):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    means = np.ascontiguousarray(rng.normal(size=(K, d)))
    covs = np.empty((K, d, d))
    for k in range(K):
        A = rng.normal(size=(d, d))
        covs[k] = A @ A.T + d * np.eye(d)
    chols = np.ascontiguousarray([cholesky(c, lower=True) for c in covs])
    log_norms = np.array(
        [-0.5 * d * np.log(2 * np.pi) - np.log(np.diag(L)).sum() for L in chols]
    )
    return X, means, chols, log_norms


def bench(fn, args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    cases = [
        (2_000, 2, 4),
        (10_000, 3, 8),
        (10_000, 10, 8),
        (100_000, 6, 4),
    ]
    print(f"{'n':>8} {'d':>3} {'K':>3} {'numpy':>12} {'cython':>12} {'speedup':>8}")
    for n, d, K in cases:
        args = make_case(n, d, K)
        t_py = bench(_kernels_py.component_logpdf, args)
        if _ckernels is None:
            print(f"{n:8d} {d:3d} {K:3d} {t_py * 1e3:10.2f}ms {'(not built)':>12} {'-':>8}")
            continue
        t_cy = bench(_ckernels.component_logpdf, args)
        a = _kernels_py.component_logpdf(*args)
        b = _ckernels.component_logpdf(*args)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12), "backends disagree"
        print(
            f"{n:8d} {d:3d} {K:3d} {t_py * 1e3:10.2f}ms {t_cy * 1e3:10.2f}ms "
            f"{t_py / t_cy:7.2f}x"
        )


if __name__ == "__main__":
    main()
