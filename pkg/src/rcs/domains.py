"""Domains: geometry, reference probability measures, quadrature, chain charts.

Every domain carries a reference probability measure rho (uniform on the
domain for all built-in families), a deterministic quadrature rule used by
the oracle computations, and a "chain chart": a box-shaped parameter space
plus a map into the domain, which is what the slice sampler actually walks.
For boxes the chart is the identity; for the cube-surface measure the chart
unfolds the six faces into a flat box so the chain never has to move along a
measure-zero subset of R^3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import CapabilityError, DataError


@dataclass(frozen=True)
class Domain:
    dim: int
    bounds: np.ndarray  # (dim, 2) ambient bounding box
    membership: Callable[[np.ndarray], np.ndarray]
    rho_sampler: Callable[[np.random.Generator, int], np.ndarray]
    quad_nodes: np.ndarray | None
    quad_weights: np.ndarray | None
    chain_dim: int
    chain_bounds: np.ndarray  # (chain_dim, 2)
    chain_to_point: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def __post_init__(self):
        if self.quad_weights is not None:
            total = float(np.sum(self.quad_weights))
            if abs(total - 1.0) > 1e-12:
                raise DataError(f"quadrature weights sum to {total}, not 1")

    @property
    def has_quadrature(self) -> bool:
        return self.quad_nodes is not None

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        if self.quad_nodes is None:
            raise CapabilityError(f"domain {self.label!r} has no quadrature rule")
        return self.quad_nodes, self.quad_weights

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.membership(as_points(points, self.dim))


def as_points(x, dim: int) -> np.ndarray:
    """Normalize scalars / 1-d / 2-d input into an (m, dim) float array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        if dim == 1:
            a = a.reshape(-1, 1)
        elif a.shape[0] == dim:
            a = a.reshape(1, dim)
        else:
            raise ValueError(f"cannot interpret shape {a.shape} as points in R^{dim}")
    if a.ndim != 2 or a.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# quadrature builders
# ---------------------------------------------------------------------------
def _gauss_panel(a: float, b: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(nodes)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _graded_breaks(a: float, b: float, panels: int, ratio: float) -> np.ndarray:
    # breakpoints geometrically clustered toward a
    return np.concatenate(([a], a + (b - a) * ratio ** np.arange(panels, -1, -1.0)))


def gauss_interval_rule(a, b, grade="none", panels=18, nodes=24, ratio=0.25,
                        plain_nodes=512):
    """Probability quadrature on [a, b] w.r.t. the uniform measure.

    ``grade`` clusters composite Gauss panels geometrically toward one or
    both endpoints, which is what resolves the boundary layers of sharply
    peaked Christoffel-type integrands.
    """
    if grade == "none":
        xs, ws = _gauss_panel(a, b, plain_nodes)
    else:
        if grade == "both":
            mid = 0.5 * (a + b)
            breaks = np.concatenate(
                [_graded_breaks(a, mid, panels, ratio),
                 _graded_breaks(b, mid, panels, ratio)[::-1]]
            )
        elif grade == "left":
            breaks = _graded_breaks(a, b, panels, ratio)
        elif grade == "right":
            breaks = _graded_breaks(b, a, panels, ratio)[::-1]
        else:
            raise ValueError(f"unknown grade {grade!r}")
        xs_l, ws_l = [], []
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            if hi > lo:
                x, w = _gauss_panel(lo, hi, nodes)
                xs_l.append(x)
                ws_l.append(w)
        xs = np.concatenate(xs_l)
        ws = np.concatenate(ws_l)
    ws = ws / (b - a)
    ws = ws / ws.sum()  # kill fp drift; uniform rho is a probability measure
    return xs, ws


def _tensor_rule(axis_rules):
    """Tensor product of per-axis (nodes, weights) rules."""
    grids = np.meshgrid(*[r[0] for r in axis_rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    w = axis_rules[0][1]
    for r in axis_rules[1:]:
        w = np.outer(w, r[1]).ravel()
    return nodes, w / w.sum()


# ---------------------------------------------------------------------------
# domain constructors
# ---------------------------------------------------------------------------
def interval_domain(a: float, b: float, grade="none", label="", **quad_kw) -> Domain:
    """[a, b] with uniform rho."""
    bounds = np.array([[a, b]], dtype=float)
    nodes, weights = gauss_interval_rule(a, b, grade=grade, **quad_kw)

    def membership(p):
        return (p[:, 0] >= a - 1e-12) & (p[:, 0] <= b + 1e-12)

    def rho_sampler(rng, size):
        return rng.uniform(a, b, size=(size, 1))

    return Domain(
        dim=1,
        bounds=bounds,
        membership=membership,
        rho_sampler=rho_sampler,
        quad_nodes=nodes.reshape(-1, 1),
        quad_weights=weights,
        chain_dim=1,
        chain_bounds=bounds.copy(),
        chain_to_point=lambda p: p,
        label=label or f"interval[{a},{b}]",
    )


def box_domain(bounds, nodes_axis=48, rule="gauss", label="") -> Domain:
    """Axis-aligned box with uniform rho and tensor quadrature.

    ``rule="midpoint"`` builds the uniform tensor grid that integrates
    trigonometric polynomials exactly (used by the full-torus fixture);
    ``nodes_axis`` may be an int or a per-axis sequence.
    """
    bounds = np.asarray(bounds, dtype=float)
    d = bounds.shape[0]
    if np.isscalar(nodes_axis):
        nodes_axis = [int(nodes_axis)] * d
    axis_rules = []
    for (a, b), k in zip(bounds, nodes_axis):
        if rule == "gauss":
            x, w = _gauss_panel(a, b, k)
            axis_rules.append((x, w / (b - a)))
        elif rule == "midpoint":
            x = a + (b - a) * (np.arange(k) + 0.5) / k
            axis_rules.append((x, np.full(k, 1.0 / k)))
        else:
            raise ValueError(f"unknown rule {rule!r}")
    nodes, weights = _tensor_rule(axis_rules)

    lo = bounds[:, 0]
    hi = bounds[:, 1]

    def membership(p):
        return np.all((p >= lo - 1e-12) & (p <= hi + 1e-12), axis=1)

    def rho_sampler(rng, size):
        return lo + (hi - lo) * rng.random((size, d))

    return Domain(
        dim=d,
        bounds=bounds,
        membership=membership,
        rho_sampler=rho_sampler,
        quad_nodes=nodes,
        quad_weights=weights,
        chain_dim=d,
        chain_bounds=bounds.copy(),
        chain_to_point=lambda p: p,
        label=label or f"box{bounds.tolist()}",
    )


def torus_domain(nodes_axis=(16, 16, 16), label="torus") -> Domain:
    """The unit torus [-1/2, 1/2)^3 with the exact tensor midpoint rule."""
    return box_domain(
        [[-0.5, 0.5]] * 3, nodes_axis=list(nodes_axis), rule="midpoint", label=label
    )


# face layout for the cube surface: (fixed axis, sign); the two free axes
# follow in increasing index order
_FACES = [(0, +1.0), (0, -1.0), (1, +1.0), (1, -1.0), (2, +1.0), (2, -1.0)]


def _surface_map(half: float):
    def chain_to_point(params):
        params = np.atleast_2d(np.asarray(params, dtype=float))
        face = np.clip(np.floor(params[:, 0]).astype(int), 0, 5)
        s = params[:, 0] - face
        t = params[:, 1]
        out = np.empty((params.shape[0], 3))
        for f, (axis, sign) in enumerate(_FACES):
            mask = face == f
            if not np.any(mask):
                continue
            free = [i for i in range(3) if i != axis]
            out[mask, axis] = sign * half
            out[mask, free[0]] = (2.0 * s[mask] - 1.0) * half
            out[mask, free[1]] = (2.0 * t[mask] - 1.0) * half
        return out

    return chain_to_point


def cube_surface_domain(half_side=0.25, nodes_axis=20, label="cube-surface") -> Domain:
    """Boundary surface of the cube [-h, h]^3, uniform surface measure.

    The six faces have equal area, so uniform measure on the chart box
    [0, 6) x [0, 1) pushes forward to the normalized surface measure.
    """
    h = float(half_side)
    chain_to_point = _surface_map(h)

    # per-face tensor Gauss rule mapped through the chart
    x, w = leggauss(nodes_axis)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    ss, tt = np.meshgrid(s, s, indexing="ij")
    wgrid = np.outer(ws, ws).ravel()
    nodes_l, weights_l = [], []
    for f in range(6):
        params = np.stack([f + ss.ravel(), tt.ravel()], axis=1)
        nodes_l.append(chain_to_point(params))
        weights_l.append(wgrid / 6.0)
    nodes = np.concatenate(nodes_l)
    weights = np.concatenate(weights_l)

    def membership(p):
        amax = np.max(np.abs(p), axis=1)
        return (np.abs(amax - h) <= 1e-9) & np.all(np.abs(p) <= h + 1e-9, axis=1)

    def rho_sampler(rng, size):
        params = np.stack([6.0 * rng.random(size), rng.random(size)], axis=1)
        return chain_to_point(params)

    return Domain(
        dim=3,
        bounds=np.array([[-h, h]] * 3),
        membership=membership,
        rho_sampler=rho_sampler,
        quad_nodes=nodes,
        quad_weights=weights / weights.sum(),
        chain_dim=2,
        chain_bounds=np.array([[0.0, 6.0], [0.0, 1.0]]),
        chain_to_point=chain_to_point,
        label=label,
    )
