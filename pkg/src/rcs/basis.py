"""Basis families: evaluatable function systems over a domain.

The five concrete families below are the ones exercised by the experiment
suite; all of them are deliberately non-orthogonal (or numerically
redundant) w.r.t. the uniform reference measure of their domain, which is
the regime the sampler targets.  Polynomial blocks use first-kind Chebyshev
polynomials mapped affinely onto the domain interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .domains import (
    Domain,
    as_points,
    box_domain,
    cube_surface_domain,
    interval_domain,
    torus_domain,
)
from .errors import DomainError


@dataclass
class BasisSet:
    n: int
    domain: Domain
    is_complex: bool
    label: str
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    params: dict = field(default_factory=dict)

    def eval(self, points, check: bool = True) -> np.ndarray:
        """Evaluate all basis functions at a batch of points -> (m, n)."""
        pts = as_points(points, self.domain.dim)
        if check:
            inside = self.domain.membership(pts)
            if not np.all(inside):
                bad = pts[~inside][0]
                raise DomainError(f"point {bad} outside domain {self.domain.label!r}")
        return self.evaluator(pts)

    def eval_one(self, x, check: bool = True) -> np.ndarray:
        return self.eval(x, check=check)[0]


def eval_basis(basis: BasisSet, x) -> np.ndarray:
    """Vector of basis evaluations phi(x); raises DomainError outside X."""
    return basis.eval_one(x, check=True)


def _mapped_chebyshev(points_1d: np.ndarray, order: int, a: float, b: float) -> np.ndarray:
    t = (2.0 * points_1d - (a + b)) / (b - a)
    return kernels.chebyshev_t(t, order)


# ---------------------------------------------------------------------------
# concrete families
# ---------------------------------------------------------------------------
def make_weighted_poly_basis(n1: int, n2: int, weight: Callable | None = None) -> BasisSet:
    """{p_0..p_{n1-1}} u {w*p_0..w*p_{n2-1}} on [-1, 1], rho uniform.

    ``weight`` defaults to sqrt(x+1), the weight used throughout the
    experiment suite.  Chebyshev polynomials of the first kind are used for
    the p_i.
    """
    if n1 < 0 or n2 < 0 or n1 + n2 < 1:
        raise ValueError("need n1, n2 >= 0 with n1 + n2 >= 1")
    if weight is None and n2 > 0:
        weight = lambda x: np.sqrt(x + 1.0)
    domain = interval_domain(-1.0, 1.0, grade="both", label="interval[-1,1]")
    order = max(n1, n2)

    def evaluator(pts):
        x = pts[:, 0]
        T = _mapped_chebyshev(x, max(order, 1), -1.0, 1.0)
        blocks = []
        if n1 > 0:
            blocks.append(T[:, :n1])
        if n2 > 0:
            blocks.append(weight(x)[:, None] * T[:, :n2])
        return np.ascontiguousarray(np.hstack(blocks))

    return BasisSet(
        n=n1 + n2,
        domain=domain,
        is_complex=False,
        label=f"weighted-poly(n1={n1},n2={n2})",
        evaluator=evaluator,
        params={"n1": n1, "n2": n2},
    )


def make_chebyshev_basis(n: int) -> BasisSet:
    """Plain Chebyshev basis on [-1, 1] (weighted-poly with empty second block)."""
    b = make_weighted_poly_basis(n, 0)
    b.label = f"chebyshev(n={n})"
    return b


def lightning_poles(n1: int) -> np.ndarray:
    """Poles q_i = -exp(4(sqrt(i) - sqrt(n1))), i = 1..n1, clustered at 0-."""
    i = np.arange(1, n1 + 1, dtype=float)
    return -np.exp(4.0 * (np.sqrt(i) - np.sqrt(n1)))


def make_lightning_basis(n1: int, n2: int) -> BasisSet:
    """{-q_i/(x - q_i)} u {p_0..p_{n2-1}} on [0, 1], rho uniform."""
    if n1 < 1 or n2 < 0:
        raise ValueError("need n1 >= 1 and n2 >= 0")
    q = lightning_poles(n1)
    domain = interval_domain(0.0, 1.0, grade="both", label="interval[0,1]")

    def evaluator(pts):
        x = pts[:, 0]
        frac = -q[None, :] / (x[:, None] - q[None, :])
        if n2 == 0:
            return np.ascontiguousarray(frac)
        P = _mapped_chebyshev(x, n2, 0.0, 1.0)
        return np.ascontiguousarray(np.hstack([frac, P]))

    return BasisSet(
        n=n1 + n2,
        domain=domain,
        is_complex=False,
        label=f"lightning(n1={n1},n2={n2})",
        evaluator=evaluator,
        params={"n1": n1, "n2": n2, "poles": q},
    )


def make_lightning2d_basis(n1: int, n2: int, n3: int) -> BasisSet:
    """2D lightning basis on [-2, 2]^2 with poles off the curve Q(x,y)=0.

    Q(x,y) = x^3 - 2x + 1 - y^2, poles q_j = +-i exp(-4(sqrt(n1)-sqrt(j))).
    n = 2*n1*n2^2 + n3^2; complex-valued.
    """
    if n1 < 1 or n2 < 1 or n3 < 1:
        raise ValueError("need n1, n2, n3 >= 1")
    j = np.arange(1, n1 + 1, dtype=float)
    radii = np.exp(-4.0 * (np.sqrt(n1) - np.sqrt(j)))
    poles = np.concatenate([1j * radii, -1j * radii])
    domain = box_domain([[-2.0, 2.0], [-2.0, 2.0]], nodes_axis=48, label="box[-2,2]^2")

    def evaluator(pts):
        x, y = pts[:, 0], pts[:, 1]
        Q = x**3 - 2.0 * x + 1.0 - y**2
        Px = _mapped_chebyshev(x, max(n2, n3), -2.0, 2.0)
        Py = _mapped_chebyshev(y, max(n2, n3), -2.0, 2.0)
        pair2 = np.einsum("mi,mj->mij", Px[:, :n2], Py[:, :n2]).reshape(len(x), n2 * n2)
        blocks = []
        for q in poles:
            blocks.append((q / (Q - q))[:, None] * pair2)
        pair3 = np.einsum("mi,mj->mij", Px[:, :n3], Py[:, :n3]).reshape(len(x), n3 * n3)
        blocks.append(pair3.astype(np.complex128))
        return np.ascontiguousarray(np.hstack(blocks))

    return BasisSet(
        n=2 * n1 * n2 * n2 + n3 * n3,
        domain=domain,
        is_complex=True,
        label=f"lightning-2d(n1={n1},n2={n2},n3={n3})",
        evaluator=evaluator,
        params={"n1": n1, "n2": n2, "n3": n3},
    )


def _fourier_modes(nx: int, ny: int, nz: int) -> np.ndarray:
    ks = [
        (kx, ky, kz)
        for kx in range(-nx, nx + 1)
        for ky in range(-ny, ny + 1)
        for kz in range(-nz, nz + 1)
    ]
    return np.array(ks, dtype=float)


def _fourier_evaluator(modes: np.ndarray):
    def evaluator(pts):
        return np.ascontiguousarray(np.exp(2j * np.pi * (pts @ modes.T)))

    return evaluator


def make_fourier_surface_basis(nx: int, ny: int, nz: int) -> BasisSet:
    """Tensor Fourier modes restricted to the surface of a centered cube.

    The cube has side 1/2 (half-side 1/4), strictly inside the torus
    [-1/2, 1/2)^3; rho is the normalized surface measure.
    """
    if min(nx, ny, nz) < 0:
        raise ValueError("mode counts must be >= 0")
    modes = _fourier_modes(nx, ny, nz)
    domain = cube_surface_domain(half_side=0.25, nodes_axis=24)
    return BasisSet(
        n=len(modes),
        domain=domain,
        is_complex=True,
        label=f"fourier-surface(nx={nx},ny={ny},nz={nz})",
        evaluator=_fourier_evaluator(modes),
        params={"nx": nx, "ny": ny, "nz": nz},
    )


def make_fourier_torus_basis(nx: int, ny: int, nz: int) -> BasisSet:
    """Same Fourier modes on the full torus: exactly orthonormal (G = I)."""
    if min(nx, ny, nz) < 0:
        raise ValueError("mode counts must be >= 0")
    modes = _fourier_modes(nx, ny, nz)
    nodes_axis = tuple(max(8, 2 * k + 2) for k in (nx, ny, nz))
    domain = torus_domain(nodes_axis=nodes_axis)
    return BasisSet(
        n=len(modes),
        domain=domain,
        is_complex=True,
        label=f"fourier-torus(nx={nx},ny={ny},nz={nz})",
        evaluator=_fourier_evaluator(modes),
        params={"nx": nx, "ny": ny, "nz": nz},
    )


def make_elm_basis(n: int, seed: int) -> BasisSet:
    """Random sigmoid features g(a_i . x + b_i) on [0, 1]^2.

    Hidden parameters are drawn once from the seed and kept with the basis
    so runs are reproducible: a_i uniform on [-1, 1]^2, b_i uniform on [0, 1].
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(n, 2))
    b = rng.uniform(0.0, 1.0, size=n)
    domain = box_domain([[0.0, 1.0], [0.0, 1.0]], nodes_axis=48, label="box[0,1]^2")

    def evaluator(pts):
        z = pts @ a.T + b
        return np.ascontiguousarray(1.0 / (1.0 + np.exp(-z)))

    return BasisSet(
        n=n,
        domain=domain,
        is_complex=False,
        label=f"elm(n={n},seed={seed})",
        evaluator=evaluator,
        params={"n": n, "seed": seed, "a": a, "b": b},
    )


def make_constant_basis() -> BasisSet:
    """The single constant function {1} on [0, 1]; the smallest fixture."""
    domain = interval_domain(0.0, 1.0, grade="none", plain_nodes=64, label="interval[0,1]")
    return BasisSet(
        n=1,
        domain=domain,
        is_complex=False,
        label="constant",
        evaluator=lambda pts: np.ones((pts.shape[0], 1)),
        params={},
    )


def basis_from_config(cfg: dict) -> BasisSet:
    """Build a basis from a CLI config mapping (family name + int params)."""
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    if family == "weighted-poly":
        return make_weighted_poly_basis(int(cfg["n1"]), int(cfg["n2"]))
    if family == "lightning":
        return make_lightning_basis(int(cfg["n1"]), int(cfg["n2"]))
    if family == "lightning-2d":
        return make_lightning2d_basis(int(cfg["n1"]), int(cfg["n2"]), int(cfg["n3"]))
    if family == "fourier-surface":
        return make_fourier_surface_basis(int(cfg["nx"]), int(cfg["ny"]), int(cfg["nz"]))
    if family == "fourier-torus":
        return make_fourier_torus_basis(int(cfg["nx"]), int(cfg["ny"]), int(cfg["nz"]))
    if family == "elm":
        return make_elm_basis(int(cfg["n"]), int(cfg.get("seed", 0)))
    if family == "chebyshev":
        return make_chebyshev_basis(int(cfg["n"]))
    if family == "constant":
        return make_constant_basis()
    raise ValueError(f"unknown basis family {family!r}")
