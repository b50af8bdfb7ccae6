"""Weighted, ridge-regularized least-squares fitting and error metrics.

The discrete fit minimizes ``sum_k w_k |f(x_k) - sum_i c_i phi_i(x_k)|^2 +
eps^2 ||c||^2`` and is solved through an orthogonal factorization of the
stacked weighted design ``[diag(sqrt(w)) Phi; eps I]`` — never through the
normal equations, which lose half the digits exactly in the numerically
redundant regime this package targets.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .basis import BasisSet
from .christoffel import GramMatrix, _clamped_eigs, _hermitize
from .domains import Domain
from .errors import DataError
from .sampler import SampleBatch


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    eps_used: float
    residual_norm: float
    design_digest: str


def _eval_target(f: Callable, points: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(points))
    return vals.reshape(-1)


def fit(basis: BasisSet, f: Callable, batch: SampleBatch, eps: float) -> FitResult:
    """Weighted eps-ridge fit of f from a sample batch."""
    if len(batch) == 0:
        raise DataError("batch is empty")
    Phi = basis.eval(batch.points, check=False)
    sw = np.sqrt(batch.weights)
    fv = _eval_target(f, batch.points)
    dtype = np.result_type(Phi.dtype, fv.dtype, np.float64)
    D = sw[:, None] * Phi.astype(dtype, copy=False)
    rhs = sw * fv.astype(dtype, copy=False)
    if not np.any(D):
        raise DataError("design matrix is identically zero")
    if eps > 0:
        D = np.vstack([D, eps * np.eye(basis.n, dtype=dtype)])
        rhs = np.concatenate([rhs, np.zeros(basis.n, dtype=dtype)])
    coeffs, _, _, _ = scipy.linalg.lstsq(D, rhs, lapack_driver="gelsy")
    resid = fv - Phi @ coeffs
    residual_norm = float(np.sqrt(np.sum(batch.weights * np.abs(resid) ** 2)))
    digest = hashlib.sha1(
        f"{basis.label}|{batch.meta.get('digest', '')}|{eps!r}".encode()
    ).hexdigest()[:16]
    return FitResult(
        coefficients=coeffs,
        eps_used=float(eps),
        residual_norm=residual_norm,
        design_digest=digest,
    )


def _reconstruction(basis: BasisSet, coeffs: np.ndarray, nodes: np.ndarray,
                    target_vals: np.ndarray) -> np.ndarray:
    recon = basis.eval(nodes, check=False) @ coeffs
    if basis.is_complex and np.isrealobj(target_vals):
        # real targets in complex bases are compared against Re(reconstruction)
        recon = recon.real
    return recon


def l2_error(basis: BasisSet, coeffs, f: Callable, domain: Domain | None = None) -> float:
    """L^2_rho distance between f and the reconstruction, by quadrature."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != basis.n:
        raise ValueError(f"expected {basis.n} coefficients, got {coeffs.shape[0]}")
    dom = domain or basis.domain
    nodes, weights = dom.quadrature()
    fv = _eval_target(f, nodes)
    recon = _reconstruction(basis, coeffs, nodes, fv)
    return float(np.sqrt(np.sum(weights * np.abs(fv - recon) ** 2)))


def _regularized_solve(M: np.ndarray, eps: float, b: np.ndarray) -> np.ndarray:
    # Hermitian solve of (M + eps^2 I) c = b with clamped eigenvalues, so
    # eps = 0 degrades gracefully to the pseudoinverse on singular M
    w, V = np.linalg.eigh(_hermitize(M))
    d = _clamped_eigs(w) + eps * eps
    y = V.conj().T @ b
    good = d > 0
    y[good] /= d[good]
    y[~good] = 0.0
    return V @ y


def oracle_projection(basis: BasisSet, f: Callable, eps: float = 0.0) -> tuple[np.ndarray, float]:
    """Coefficients and error of the eps-regularized continuous projection.

    Solved through the stacked quadrature design ``[sqrt(w) Phi; eps I]``
    rather than the normal system (G + eps^2 I) c = b: the two agree in
    exact arithmetic, but for numerically redundant bases the formed Gram
    loses the eigenvalues below u_mach ||G|| that eps is meant to regulate.
    This is the benchmark every discrete fit is compared against.
    """
    nodes, weights = basis.domain.quadrature()
    from .sampler import SampleBatch

    batch = SampleBatch(
        points=nodes,
        weights=np.asarray(weights),
        u_values=np.ones(len(weights)),
        meta={"rule": "quadrature-design", "digest": "oracle"},
    )
    result = fit(basis, f, batch, eps)
    return result.coefficients, l2_error(basis, result.coefficients, f)


def oracle_best_error(basis: BasisSet, f: Callable, G: GramMatrix | None = None,
                      eps: float = 0.0) -> float:
    """Benchmark projection error.

    With ``G`` given, solves the Hermitian system (conj(G) + eps^2 I) c = b
    with b_i = <f, phi_i> (the literal normal-equation route, adequate for
    well-conditioned Grams); with ``G=None`` it delegates to the robust
    design-QR projection.
    """
    if G is None:
        return oracle_projection(basis, f, eps)[1]
    nodes, weights = basis.domain.quadrature()
    B = basis.eval(nodes, check=False)
    fv = _eval_target(f, nodes)
    b = B.conj().T @ (weights * fv)
    coeffs = _regularized_solve(
        np.conj(G.entries), eps, b.astype(np.result_type(b.dtype, np.float64))
    )
    return l2_error(basis, coeffs, f)


def save_fit_csv(path, result: FitResult) -> None:
    c = np.asarray(result.coefficients)
    with open(path, "w") as fh:
        fh.write("coef_re,coef_im\n")
        for v in c:
            fh.write(f"{np.real(v):.17e},{np.imag(v):.17e}\n")


def load_fit_csv(path, complex_coeffs: bool = False) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0] + 1j * data[:, 1] if complex_coeffs else data[:, 0]


# ---------------------------------------------------------------------------
# built-in experiment targets
# ---------------------------------------------------------------------------
def weighted_poly_target(points) -> np.ndarray:
    """sqrt(x+1)/(1+5x^2) + cos(5x) on [-1, 1]."""
    x = np.asarray(points).reshape(-1, 1)[:, 0] if np.ndim(points) > 1 else np.ravel(points)
    return np.sqrt(x + 1.0) / (1.0 + 5.0 * x**2) + np.cos(5.0 * x)


def sqrt_target(points) -> np.ndarray:
    x = np.asarray(points).reshape(-1, 1)[:, 0] if np.ndim(points) > 1 else np.ravel(points)
    return np.sqrt(x)


TARGETS = {
    "sumframe": weighted_poly_target,
    "sqrt": sqrt_target,
    "zero": lambda pts: np.zeros(np.atleast_2d(pts).shape[0]),
    "one": lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
}


def resolve_target(name: str, basis: BasisSet | None = None) -> Callable:
    """Look up a named target; ``basis:<i>`` picks the i-th basis function."""
    if name in TARGETS:
        return TARGETS[name]
    if name.startswith("basis:") and basis is not None:
        idx = int(name.split(":", 1)[1])
        if not 0 <= idx < basis.n:
            raise ValueError(f"basis index {idx} out of range for n={basis.n}")
        return lambda pts: basis.eval(pts, check=False)[:, idx]
    raise ValueError(f"unknown target {name!r}")
