"""Gram matrices, numerical dimension, and the regularized inverse
Christoffel function — along two routes.

The oracle route works from an explicit Gram matrix (exact quadrature or a
dense Monte Carlo grid) and evaluates the quadratic form
``k(x) = phi(x)^* (G + eps^2 I)^{-1} phi(x)`` through a factorization.

The refinement route never forms a Gram: it keeps a stack of
upper-triangular factors R with ``R^H R = A^H A + eps^2 I`` (thin QR of
``[A; eps*I]``) and evaluates the running upper bound
``u(x) = min(cap, (1+delta) * min_j ||R_j^{-H} phi(x)||^2)``.

Gram convention throughout: ``G_ij = <phi_i, phi_j> = int phi_i conj(phi_j) drho``,
matching ``A^H A`` for matrices whose rows are ``conj(phi(x_k)) * scale_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
import numpy as np
from scipy.stats import qmc

from . import kernels
from .basis import BasisSet
from .domains import as_points
from .errors import DataError

_EIG_FLOOR_REL = 1e-10


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian PSD matrix of L^2_rho inner products."""

    entries: np.ndarray
    source: str = "unknown"

    def __post_init__(self):
        G = self.entries
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise DataError(f"Gram matrix must be square, got {G.shape}")
        scale = max(np.abs(G).max(), 1e-300)
        if np.abs(G - G.conj().T).max() > 1e-12 * scale:
            raise DataError("Gram matrix is not Hermitian within 1e-12 relative")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        w = np.linalg.eigvalsh(self.entries)
        floor = -_EIG_FLOOR_REL * max(abs(w[-1]), 1e-300)
        if w[0] < floor:
            raise DataError(f"Gram matrix has eigenvalue {w[0]:.3e} below PSD tolerance")
        return w

    def save_csv(self, path) -> None:
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17e")


def load_gram_csv(path, complex_entries=False, source="csv") -> GramMatrix:
    dtype = np.complex128 if complex_entries else np.float64
    return GramMatrix(np.loadtxt(path, delimiter=",", dtype=dtype), source=source)


def _hermitize(G: np.ndarray) -> np.ndarray:
    return 0.5 * (G + G.conj().T)


def gram_weighted(basis: BasisSet, points, weights) -> GramMatrix:
    """G_ij = sum_k w_k phi_i(x_k) conj(phi_j(x_k)) from arbitrary weights."""
    B = basis.eval(points, check=False)
    w = np.asarray(weights, dtype=float)
    G = _hermitize((B.T * w) @ B.conj())
    return GramMatrix(G, source=f"weighted-sample({len(w)})")


def gram_dense(basis: BasisSet, num_points: int, seed: int) -> GramMatrix:
    """Monte Carlo Gram from num_points i.i.d. rho-draws (the dense-grid oracle)."""
    if num_points < 1:
        raise ValueError("num_points must be >= 1")
    rng = np.random.default_rng(seed)
    pts = basis.domain.rho_sampler(rng, num_points)
    g = gram_weighted(basis, pts, np.full(num_points, 1.0 / num_points))
    return replace(g, source=f"dense-grid({num_points})")


def gram_quadrature(basis: BasisSet) -> GramMatrix:
    """Deterministic Gram from the domain quadrature rule."""
    nodes, weights = basis.domain.quadrature()
    g = gram_weighted(basis, nodes, weights)
    return replace(g, source="exact-quadrature")


def _clamped_eigs(values: np.ndarray) -> np.ndarray:
    # dense-grid Grams carry O(l^{-1/2}) noise; tiny negatives are clamped
    return np.maximum(values, 0.0)


def ridge_dimension(eigenvalues: np.ndarray, eps: float) -> float:
    lam = _clamped_eigs(np.asarray(eigenvalues, dtype=float))
    return float(np.sum(lam / (lam + eps * eps)))


def numerical_dimension(G: GramMatrix | np.ndarray, eps: float) -> float:
    """n^eps = sum_i lambda_i / (lambda_i + eps^2) over the Gram spectrum."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not isinstance(G, GramMatrix):
        G = GramMatrix(np.asarray(G))
    return ridge_dimension(G.eigenvalues, eps)


class KEpsEvaluator:
    """Evaluates k(x) = phi(x)^* (G + eps^2 I)^{-1} phi(x) over batches.

    Two construction routes:

    * from a formed Gram matrix — Cholesky of G + eps^2 I when that is
      numerically positive definite, else a Hermitian eigendecomposition
      with negative eigenvalues clamped to zero.  Adequate whenever eps^2
      clears the O(u_mach ||G||) eigenvalue noise of the formed matrix.
    * from a weighted design (points and weights) — thin QR of
      ``[sqrt(w) conj(Phi); eps I]``.  The padded QR computes the small
      singular values accurately and floors them at eps, so this route
      stays meaningful down to eps near machine precision; it is the one
      the dense-grid oracle uses.
    """

    def __init__(self, basis: BasisSet, eps: float, *, chol=None, eig=None):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.basis = basis
        self.eps = float(eps)
        self._chol = chol
        self._eig = eig

    @classmethod
    def from_gram(cls, basis: BasisSet, G: GramMatrix | np.ndarray, eps: float):
        entries = G.entries if isinstance(G, GramMatrix) else np.asarray(G)
        n = entries.shape[0]
        shifted = entries + (eps * eps) * np.eye(n, dtype=entries.dtype)
        try:
            return cls(basis, eps, chol=np.linalg.cholesky(shifted))
        except np.linalg.LinAlgError:
            w, V = np.linalg.eigh(_hermitize(entries))
            return cls(basis, eps, eig=(V, _clamped_eigs(w) + eps * eps))

    @classmethod
    def from_design(cls, basis: BasisSet, points, weights, eps: float):
        Phi = basis.eval(points, check=False)
        w = np.asarray(weights, dtype=float)
        D = np.conj(Phi) * np.sqrt(w)[:, None]
        n = Phi.shape[1]
        stacked = np.vstack([D, eps * np.eye(n, dtype=D.dtype)])
        R = np.linalg.qr(stacked, mode="r")
        # R^H R = G + eps^2 I with G the design Gram; reuse the Cholesky path
        return cls(basis, eps, chol=np.ascontiguousarray(_positive_diagonal(R).conj().T))

    @classmethod
    def from_dense(cls, basis: BasisSet, num_points: int, seed: int, eps: float):
        rng = np.random.default_rng(seed)
        pts = basis.domain.rho_sampler(rng, num_points)
        return cls.from_design(basis, pts, np.full(num_points, 1.0 / num_points), eps)

    @classmethod
    def from_quadrature(cls, basis: BasisSet, eps: float):
        nodes, weights = basis.domain.quadrature()
        return cls.from_design(basis, nodes, weights, eps)

    def values(self, points, check: bool = False) -> np.ndarray:
        Phi = self.basis.eval(points, check=check)
        if self._chol is not None:
            return kernels.chol_sqnorms(self._chol, Phi)
        V, d = self._eig
        Y = V.conj().T @ Phi.T
        return ((np.abs(Y) ** 2) / d[:, None]).sum(axis=0)

    def __call__(self, points) -> np.ndarray:
        return self.values(points)


def k_eps(basis: BasisSet, G: GramMatrix | np.ndarray, eps: float, x) -> float:
    """One-shot numerical inverse Christoffel function at a single point."""
    return float(KEpsEvaluator.from_gram(basis, G, eps).values(x, check=True)[0])


def default_eps(basis: BasisSet, pilot_points: int = 10_000, seed: int = 0) -> float:
    """eps = 10 * u_mach * sqrt(lambda_max(G_pilot)) from a dense pilot Gram."""
    G = gram_dense(basis, pilot_points, seed)
    lam_max = max(float(G.eigenvalues[-1]), 1e-300)
    return 10.0 * np.finfo(float).eps * float(np.sqrt(lam_max))


def cap_grid(basis: BasisSet, grid_size: int) -> np.ndarray:
    """Deterministic evaluation grid for sup estimates.

    Combines a uniform grid in chart space, a quasi-random Sobol fill for
    d >= 2, and the domain quadrature nodes (which are graded toward the
    boundary layers where Christoffel-type functions peak).
    """
    dom = basis.domain
    lo, hi = dom.chain_bounds[:, 0], dom.chain_bounds[:, 1]
    cd = dom.chain_dim
    parts = []
    if cd == 1:
        parts.append(np.linspace(lo[0], hi[0], max(grid_size, 2)).reshape(-1, 1))
    else:
        per_axis = max(2, int(round(grid_size ** (1.0 / cd))))
        axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(cd)]
        mesh = np.meshgrid(*axes, indexing="ij")
        parts.append(np.stack([g.ravel() for g in mesh], axis=1))
        sob = qmc.Sobol(d=cd, scramble=False).random_base2(
            max(1, int(np.ceil(np.log2(grid_size))))
        )[:grid_size]
        parts.append(lo + (hi - lo) * sob)
    params = np.concatenate(parts)
    pts = dom.chain_to_point(params)
    if dom.has_quadrature:
        pts = np.concatenate([pts, dom.quad_nodes])
    return pts


def cap_estimate(basis: BasisSet, G: GramMatrix | np.ndarray | KEpsEvaluator,
                 eps: float, grid_size: int = 1024) -> float:
    """Intentional overestimate (x2) of sup_x k(x) over a deterministic grid.

    Overestimation is cheap for the refinement loop, whose cost grows only
    logarithmically in this bound.  Pass a KEpsEvaluator directly to pick
    the design-QR route at tiny eps.
    """
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    ev = G if isinstance(G, KEpsEvaluator) else KEpsEvaluator.from_gram(basis, G, eps)
    return 2.0 * float(np.max(ev.values(cap_grid(basis, grid_size))))


def design_numerical_dimension(basis: BasisSet, eps: float,
                               points=None, weights=None) -> float:
    """n^eps from the singular values of the weighted design.

    Accurate even when eps^2 sits below the eigenvalue noise of the formed
    Gram; defaults to the domain quadrature design.
    """
    if points is None:
        points, weights = basis.domain.quadrature()
    Phi = basis.eval(points, check=False)
    D = np.conj(Phi) * np.sqrt(np.asarray(weights, dtype=float))[:, None]
    sv = np.linalg.svd(D, compute_uv=False)
    return ridge_dimension(sv * sv, eps)


@dataclass(frozen=True)
class ChristoffelReport:
    """Oracle diagnostics for one basis: spectrum, dimension, cap, k grid."""

    n_eps: float
    eigenvalues: np.ndarray
    cap_estimate: float
    grid: np.ndarray
    k_values: np.ndarray

    def __post_init__(self):
        n = len(self.eigenvalues)
        if not 0.0 < self.n_eps <= n + 1e-9:
            raise DataError(f"n_eps = {self.n_eps} outside (0, {n}]")
        if self.cap_estimate < np.max(self.k_values):
            raise DataError("cap estimate below the grid maximum of k")


def christoffel_report(basis: BasisSet, G: GramMatrix, eps: float,
                       grid_size: int = 1024) -> ChristoffelReport:
    """Bundle the oracle-side diagnostics computed from a Gram matrix."""
    ev = KEpsEvaluator.from_gram(basis, G, eps)
    grid = cap_grid(basis, grid_size)
    k_values = ev.values(grid)
    return ChristoffelReport(
        n_eps=numerical_dimension(G, eps),
        eigenvalues=G.eigenvalues,
        cap_estimate=2.0 * float(np.max(k_values)),
        grid=grid,
        k_values=k_values,
    )


# ---------------------------------------------------------------------------
# the R-factor stack behind the refinement loop
# ---------------------------------------------------------------------------
PRUNE_MODES = ("keep-all", "first-plus-last-two")


@dataclass(frozen=True)
class RFactorStack:
    """Running upper bound u: cap value plus upper-triangular factors.

    ``u(x) = min(cap, (1+delta) * min_j ||R_j^{-H} phi(x)||^2)``, evaluated
    through triangular solves only.  Under keep-all, pushing a factor takes
    the min over a superset, so u never increases pointwise; the pruned
    mode keeps the first factor plus the two most recent, trading exact
    monotonicity for a flat evaluation cost per point.
    """

    cap: float
    delta: float
    factors: tuple[np.ndarray, ...] = ()
    prune_mode: str = "first-plus-last-two"
    pushes: int = 0

    def __post_init__(self):
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.prune_mode not in PRUNE_MODES:
            raise ValueError(f"prune_mode must be one of {PRUNE_MODES}")

    @property
    def n(self) -> int | None:
        return self.factors[0].shape[0] if self.factors else None

    def _stacked(self, dtype) -> np.ndarray:
        if not self.factors:
            return np.empty((0, 0, 0), dtype=dtype)
        dt = np.result_type(dtype, *(f.dtype for f in self.factors))
        return np.stack([f.astype(dt, copy=False) for f in self.factors])

    def values(self, basis: BasisSet, points) -> np.ndarray:
        """u evaluated over a batch of points."""
        Phi = basis.eval(points, check=False)
        if not self.factors:
            return np.full(Phi.shape[0], self.cap)
        return kernels.stack_u_values(
            self._stacked(Phi.dtype), Phi, self.cap, 1.0 + self.delta
        )

    def evaluator(self, basis: BasisSet):
        """Closure points -> u(points) with the factor array prebuilt."""
        if not self.factors:
            cap = self.cap
            return lambda pts: np.full(as_points(pts, basis.domain.dim).shape[0], cap)
        Rs = self._stacked(np.complex128 if basis.is_complex else np.float64)
        scale = 1.0 + self.delta

        def u_fn(pts):
            Phi = basis.eval(pts, check=False)
            return kernels.stack_u_values(Rs, Phi, self.cap, scale)

        return u_fn


def stack_init(cap: float, delta: float = 0.5,
               prune_mode: str = "first-plus-last-two") -> RFactorStack:
    """Fresh stack: u(x) = cap everywhere."""
    return RFactorStack(cap=float(cap), delta=float(delta), prune_mode=prune_mode)


def _positive_diagonal(R: np.ndarray) -> np.ndarray:
    d = np.diagonal(R)
    phase = d / np.abs(d)  # eps-padding rows keep the diagonal away from 0
    return phase.conj()[:, None] * R


def stack_push(stack: RFactorStack, A: np.ndarray, eps: float) -> RFactorStack:
    """Thin-QR factor of [A; eps*I] appended under the stack's prune policy."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    A = np.atleast_2d(np.asarray(A))
    n = A.shape[1]
    if stack.n is not None and n != stack.n:
        raise ValueError(f"factor has {stack.n} columns, matrix A has {n}")
    dtype = np.result_type(A.dtype, np.float64)
    stacked = np.vstack([A.astype(dtype, copy=False), eps * np.eye(n, dtype=dtype)])
    R = np.linalg.qr(stacked, mode="r")
    R = np.ascontiguousarray(np.triu(_positive_diagonal(R)))
    factors = stack.factors + (R,)
    if stack.prune_mode == "first-plus-last-two" and len(factors) > 3:
        factors = (factors[0],) + factors[-2:]
    return replace(stack, factors=factors, pushes=stack.pushes + 1)


def u_eval(stack: RFactorStack, basis: BasisSet, x) -> float:
    """The running upper bound at a single point."""
    return float(stack.values(basis, x)[0])


def save_stack(path, stack: RFactorStack) -> None:
    arrays = {f"factor_{i}": f for i, f in enumerate(stack.factors)}
    np.savez(
        path,
        cap=stack.cap,
        delta=stack.delta,
        prune_mode=stack.prune_mode,
        pushes=stack.pushes,
        num_factors=len(stack.factors),
        **arrays,
    )


def load_stack(path) -> RFactorStack:
    with np.load(path, allow_pickle=False) as data:
        num = int(data["num_factors"])
        return RFactorStack(
            cap=float(data["cap"]),
            delta=float(data["delta"]),
            factors=tuple(data[f"factor_{i}"] for i in range(num)),
            prune_mode=str(data["prune_mode"]),
            pushes=int(data["pushes"]),
        )
