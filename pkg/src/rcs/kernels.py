"""Hot numerical kernels: numba-accelerated with a pure-numpy fallback.

Three kernels dominate the run time of the refinement loop and its Markov
chain sampler:

* Chebyshev recurrence evaluation over batches of points,
* quadratic forms ``||L^{-1} v||^2`` against a Cholesky factor,
* the running upper bound ``min(cap, scale * min_j ||R_j^{-H} v||^2)``
  evaluated against a stack of upper-triangular factors.

Each kernel exists twice: a scalar-loop version compiled with numba and a
vectorized numpy/scipy version.  The active backend is chosen at import
time; set ``RCS_PURE_NUMPY=1`` to force the numpy path (no numba required).
``benchmarks/bench_kernels.py`` times one against the other.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.linalg import solve_triangular

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("RCS_PURE_NUMPY", "0") != "1"


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# scalar-loop implementations (numba-compilable)
# ---------------------------------------------------------------------------
def _chebyshev_loop(x, order):
    m = x.shape[0]
    out = np.empty((m, order))
    for i in range(m):
        out[i, 0] = 1.0
    if order > 1:
        for i in range(m):
            out[i, 1] = x[i]
        for k in range(2, order):
            for i in range(m):
                out[i, k] = 2.0 * x[i] * out[i, k - 1] - out[i, k - 2]
    return out


def _chol_sqnorms_loop(L, V):
    m, n = V.shape
    out = np.empty(m)
    y = np.empty(n, dtype=V.dtype)
    for i in range(m):
        acc = 0.0
        for r in range(n):
            s = V[i, r]
            for c in range(r):
                s -= L[r, c] * y[c]
            yv = s / L[r, r]
            y[r] = yv
            acc += abs(yv) ** 2
        out[i] = acc
    return out


def _stack_u_loop(Rs, V, cap, scale):
    # solves R^H y = v by forward substitution; (R^H)_{rc} = conj(R[c, r])
    m, n = V.shape
    nf = Rs.shape[0]
    out = np.empty(m)
    y = np.empty(n, dtype=V.dtype)
    for i in range(m):
        best = cap
        for f in range(nf):
            R = Rs[f]
            acc = 0.0
            exceeded = False
            for r in range(n):
                s = V[i, r]
                for c in range(r):
                    s -= np.conj(R[c, r]) * y[c]
                yv = s / np.conj(R[r, r])
                y[r] = yv
                acc += abs(yv) ** 2
                if scale * acc >= best:
                    exceeded = True
                    break
            if not exceeded:
                val = scale * acc
                if val < best:
                    best = val
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# vectorized numpy implementations
# ---------------------------------------------------------------------------
def _chebyshev_numpy(x, order):
    m = x.shape[0]
    out = np.empty((m, order))
    out[:, 0] = 1.0
    if order > 1:
        out[:, 1] = x
        for k in range(2, order):
            out[:, k] = 2.0 * x * out[:, k - 1] - out[:, k - 2]
    return out


def _chol_sqnorms_numpy(L, V):
    Y = solve_triangular(L, V.T, lower=True, check_finite=False)
    return np.abs(Y) ** 2 if Y.ndim == 1 else (np.abs(Y) ** 2).sum(axis=0)


def _stack_u_numpy(Rs, V, cap, scale):
    best = np.full(V.shape[0], cap)
    for f in range(Rs.shape[0]):
        Y = solve_triangular(Rs[f], V.T, trans="C", lower=False, check_finite=False)
        np.minimum(best, scale * (np.abs(Y) ** 2).sum(axis=0), out=best)
    return best


if USE_NUMBA:
    _chebyshev = njit(cache=True)(_chebyshev_loop)
    _chol_sqnorms = njit(cache=True)(_chol_sqnorms_loop)
    _stack_u = njit(cache=True)(_stack_u_loop)
else:
    _chebyshev = _chebyshev_numpy
    _chol_sqnorms = _chol_sqnorms_numpy
    _stack_u = _stack_u_numpy


# ---------------------------------------------------------------------------
# public wrappers (shape/dtype normalization)
# ---------------------------------------------------------------------------
def chebyshev_t(x: np.ndarray, order: int) -> np.ndarray:
    """First-kind Chebyshev values T_0..T_{order-1} for points in [-1, 1]."""
    x = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    if order < 1:
        raise ValueError("order must be >= 1")
    return _chebyshev(x, order)


def chol_sqnorms(L: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Row-wise ``||L^{-1} V[i]||^2`` for a lower-triangular factor L."""
    V = np.atleast_2d(V)
    dt = np.promote_types(L.dtype, V.dtype)
    L = np.ascontiguousarray(L, dtype=dt)
    V = np.ascontiguousarray(V, dtype=dt)
    return _chol_sqnorms(L, V)


def stack_u_values(Rs: np.ndarray, V: np.ndarray, cap: float, scale: float) -> np.ndarray:
    """``min(cap, scale * min_j ||R_j^{-H} V[i]||^2)`` per row of V.

    Rs is a (k, n, n) array of upper-triangular factors; an empty stack
    returns the cap everywhere.
    """
    V = np.atleast_2d(V)
    if Rs.shape[0] == 0:
        return np.full(V.shape[0], float(cap))
    dt = np.promote_types(Rs.dtype, V.dtype)
    Rs = np.ascontiguousarray(Rs, dtype=dt)
    V = np.ascontiguousarray(V, dtype=dt)
    return _stack_u(Rs, V, float(cap), float(scale))


def warm_up() -> None:
    """Trigger numba compilation on tiny inputs (no-op on the numpy path)."""
    x = np.linspace(-1.0, 1.0, 4)
    chebyshev_t(x, 3)
    L = np.eye(3)
    V = np.ones((2, 3))
    chol_sqnorms(L, V)
    for dt in (np.float64, np.complex128):
        Rs = np.stack([np.eye(3, dtype=dt)])
        stack_u_values(Rs, V.astype(dt), 10.0, 1.5)
