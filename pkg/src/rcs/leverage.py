"""Ridge leverage scores and the whack-a-mole row reweighting algorithm.

This is the discrete engine underneath the continuous weighting argument:
given row targets u_k > 0, repeatedly sweep the rows of W A (W diagonal,
starting from the identity) and shrink any weight whose ridge leverage
score meets its target, until a full sweep changes nothing.  The converged
W satisfies ``tau_k(WA) <= u_k`` for every row while the mass of reweighted
targets stays below the matrix numerical dimension.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .christoffel import ridge_dimension
from .errors import NonTerminationError


@dataclass(frozen=True)
class LeverageProfile:
    scores: np.ndarray  # tau_k, strictly below 1 for eps > 0
    n_eps_matrix: float  # sum of scores = sum lambda_i/(lambda_i + eps^2)
    matrix_digest: str


@dataclass(frozen=True)
class WeightMatrixResult:
    diag_weights: np.ndarray  # in [0, 1]
    converged: bool
    sweeps: int


@dataclass(frozen=True)
class ReweightingReport:
    max_score_excess: float  # max_k tau_k(WA) - u_k
    reweighted_mass: float  # sum of u_k over rows with W_kk < 1 - tol
    n_eps_matrix: float
    monotonicity_ok: bool
    score_bound_ok: bool
    mass_bound_ok: bool

    @property
    def ok(self) -> bool:
        return self.score_bound_ok and self.mass_bound_ok and self.monotonicity_ok


def _digest(A: np.ndarray) -> str:
    h = hashlib.sha1()
    h.update(str(A.shape).encode())
    h.update(np.ascontiguousarray(A).tobytes()[:4096])
    return h.hexdigest()[:16]


def _scores(A: np.ndarray, w: np.ndarray | None, eps: float) -> np.ndarray:
    B = A if w is None else w[:, None] * A
    n = A.shape[1]
    M = B.conj().T @ B + (eps * eps) * np.eye(n, dtype=B.dtype)
    L = np.linalg.cholesky(M)
    return kernels.chol_sqnorms(L, np.conj(B))


def ridge_leverage_scores(A: np.ndarray, eps: float) -> LeverageProfile:
    """tau_k = a_k (A^*A + eps^2 I)^{-1} a_k^* via one factorization."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    A = np.atleast_2d(np.asarray(A))
    scores = _scores(A, None, eps)
    lam = np.linalg.eigvalsh(A.conj().T @ A)
    return LeverageProfile(
        scores=scores,
        n_eps_matrix=ridge_dimension(lam, eps),
        matrix_digest=_digest(A),
    )


def _shrink_weight(w_k: float, tau_k: float, u_k: float, iters: int = 60) -> float:
    # score of row k as a function of its own weight omega (others fixed):
    #   tau(omega) = omega^2 s / (1 + omega^2 s),  s = score of the bare row
    # against the stack with row k removed; recovered from the current score
    # by a rank-one downdate.  Monotone in omega, so bisection on [0, w_k].
    denom = max(1.0 - tau_k, 1e-300)
    s = tau_k / (w_k * w_k * denom)
    lo, hi = 0.0, w_k
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid * mid * s / (1.0 + mid * mid * s) >= u_k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def whack_a_mole(A: np.ndarray, u: np.ndarray, eps: float, tol: float = 1e-10,
                 max_sweeps: int = 500) -> WeightMatrixResult:
    """Find diagonal W in [0, I] with tau_k(WA) <= u_k for all rows.

    Sweeps rows in order; a sweep that changes no weight by more than tol
    ends the run.  Raises NonTerminationError (carrying the last iterate)
    if max_sweeps is exhausted.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    A = np.atleast_2d(np.asarray(A))
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("all score targets u_k must be positive")
    m = A.shape[0]
    w = np.ones(m)
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for k in range(m):
            if u[k] >= 1.0 or w[k] == 0.0:
                continue  # scores are strictly below 1 for eps > 0
            tau_k = float(_scores(A, w, eps)[k])
            if tau_k < u[k]:
                continue
            new_w = _shrink_weight(w[k], tau_k, u[k])
            max_change = max(max_change, w[k] - new_w)
            w[k] = new_w
        if max_change <= tol:
            return WeightMatrixResult(diag_weights=w, converged=True, sweeps=sweep)
    raise NonTerminationError(
        f"whack-a-mole did not converge in {max_sweeps} sweeps",
        last_result=WeightMatrixResult(diag_weights=w, converged=False, sweeps=max_sweeps),
    )


def verify_reweighting(A: np.ndarray, u: np.ndarray, eps: float,
                    result: WeightMatrixResult, tol: float = 1e-8) -> ReweightingReport:
    """Check both guarantees of the reweighting plus the monotonicity fact.

    Monotonicity spot check: decreasing one weight by a finite factor must
    not decrease any other row's score.
    """
    A = np.atleast_2d(np.asarray(A))
    u = np.asarray(u, dtype=float)
    w = result.diag_weights
    scores = _scores(A, w, eps)
    excess = float(np.max(scores - u))
    reweighted = w < 1.0 - tol
    mass = float(np.sum(u[reweighted]))
    n_eps = ridge_dimension(np.linalg.eigvalsh(A.conj().T @ A), eps)

    j = int(np.argmax(w > 0)) if np.any(w > 0) else 0
    w2 = w.copy()
    w2[j] *= 0.9
    scores2 = _scores(A, w2, eps)
    others = np.arange(len(w)) != j
    mono_ok = bool(np.all(scores2[others] >= scores[others] - 1e-12))

    return ReweightingReport(
        max_score_excess=excess,
        reweighted_mass=mass,
        n_eps_matrix=n_eps,
        monotonicity_ok=mono_ok,
        score_bound_ok=excess <= tol,
        mass_bound_ok=mass <= n_eps + 1e-10,
    )
