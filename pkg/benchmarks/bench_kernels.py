#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

The three kernels here sit inside the slice sampler's density evaluation,
which dominates the run time of the refinement loop.  The single-point rows
are the ones that matter for sampling (one density evaluation per proposal);
the batch rows matter for grid diagnostics and ||u||_1 estimation.

Usage:
    python benchmarks/bench_kernels.py [--n 40] [--factors 3] [--repeat 2000]

The numba timings compile on first call; compilation time is excluded.
Set RCS_PURE_NUMPY=1 to check that the package itself runs on the fallback
path (the parity of the two paths is asserted by tests/test_kernels.py).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rcs import kernels
from rcs.basis import make_weighted_poly_basis
from rcs.refine import RcsConfig, run_rcs
from rcs.sampler import ChainConfig

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _timeit(fn, repeat):
    fn()  # warm-up / compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_kernels(n, factors, repeat):
    rng = np.random.default_rng(0)
    x1 = rng.uniform(-1, 1, 1)
    xb = rng.uniform(-1, 1, 1000)
    A = rng.standard_normal((5 * n, n))
    R = np.linalg.qr(np.vstack([A, 1e-6 * np.eye(n)]), mode="r")
    Rs = np.ascontiguousarray(np.stack([R * (1 + 0.1 * k) for k in range(factors)]))
    L = np.ascontiguousarray(np.linalg.cholesky(A.T @ A + np.eye(n)))
    v1 = np.ascontiguousarray(rng.standard_normal((1, n)))
    vb = np.ascontiguousarray(rng.standard_normal((1000, n)))

    impls = {"numpy": (kernels._chebyshev_numpy, kernels._chol_sqnorms_numpy,
                       kernels._stack_u_numpy)}
    if HAVE_NUMBA:
        impls["numba"] = (njit(cache=True)(kernels._chebyshev_loop),
                          njit(cache=True)(kernels._chol_sqnorms_loop),
                          njit(cache=True)(kernels._stack_u_loop))

    cases = [
        ("chebyshev 1 pt, order n", lambda f: f[0](x1, n)),
        ("chebyshev 1000 pts", lambda f: f[0](xb, n)),
        ("chol qform 1 pt", lambda f: f[1](L, v1)),
        ("chol qform 1000 pts", lambda f: f[1](L, vb)),
        (f"u-stack ({factors} factors) 1 pt", lambda f: f[2](Rs, v1, 1e9, 1.5)),
        (f"u-stack ({factors} factors) 1000 pts", lambda f: f[2](Rs, vb, 1e9, 1.5)),
    ]
    width = max(len(c[0]) for c in cases)
    header = f"{'kernel':<{width}}" + "".join(f"{k:>14}" for k in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, call in cases:
        times = [_timeit(lambda f=fns: call(f), repeat) for fns in impls.values()]
        row = f"{name:<{width}}" + "".join(f"{t * 1e6:>12.2f}us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


def bench_refinement(n1):
    """One refinement run under the active backend, as an end-to-end number."""
    basis = make_weighted_poly_basis(n1, n1)
    from rcs.christoffel import KEpsEvaluator, cap_estimate

    eps = 1e-12
    ev = KEpsEvaluator.from_quadrature(basis, eps)
    cap = cap_estimate(basis, ev, eps, grid_size=512)
    cfg = RcsConfig(eps=eps, cap_bound=cap, n_eps_bound=float(basis.n), seed=0,
                    chain=ChainConfig(burn_in=100, thinning=2))
    t0 = time.perf_counter()
    rep = run_rcs(basis, cfg)
    dt = time.perf_counter() - t0
    print(f"\nrefinement run (weighted-poly n={basis.n}, backend={kernels.backend_name()}): "
          f"{rep.n_iterations} iterations, {rep.total_samples} samples, {dt:.2f}s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40, help="basis size for the kernels")
    ap.add_argument("--factors", type=int, default=3, help="factors on the u stack")
    ap.add_argument("--repeat", type=int, default=2000, help="timing repetitions")
    ap.add_argument("--skip-e2e", action="store_true", help="kernel table only")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not importable: showing the numpy path only")
    bench_kernels(args.n, args.factors, args.repeat)
    if not args.skip_e2e:
        bench_refinement(args.n // 2)


if __name__ == "__main__":
    main()
