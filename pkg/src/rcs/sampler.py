"""Sampling from mu_u (density proportional to u * rho) and batch assembly.

The sampler is a multivariate slice sampler in the domain's chart space,
using the shrinking-hyperrectangle scheme: draw a level under the current
log density, place a randomly offset box of the configured widths around
the current state, and shrink it coordinate-wise toward the current state
until a proposal clears the level.  The density is used unnormalized, so
no estimate of ||u||_1 is needed to run the chain; points outside the
chart box get density zero, which restricts the chain to the domain.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domains import Domain
from .errors import DataError, SamplerError


@dataclass(frozen=True)
class ChainConfig:
    burn_in: int = 200
    thinning: int | None = None  # default: max(1, chain dimension)
    width: tuple | None = None  # per chart dimension; default: full box widths
    seed: int = 0
    chains: int = 1

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning is not None and self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.width is not None and np.any(np.asarray(self.width) <= 0):
            raise ValueError("widths must be positive")


@dataclass(frozen=True)
class SampleBatch:
    """Points with least-squares weights and the u values that produced them."""

    points: np.ndarray
    weights: np.ndarray
    u_values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.points.shape[0]
        if not (len(self.weights) == len(self.u_values) == m):
            raise DataError("points, weights, u_values lengths disagree")
        if m and np.min(self.weights) <= 0:
            raise DataError("weights must be positive")

    def __len__(self):
        return self.points.shape[0]


def _spawn_rngs(seed, chains: int) -> list[np.random.Generator]:
    seq = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(chains)]


def _slice_step(x, logf_x, logdens, widths, lo, hi, rng, max_shrink=10_000):
    level = logf_x + np.log(rng.random())
    left = x - widths * rng.random(x.shape[0])
    right = left + widths
    np.maximum(left, lo, out=left)
    np.minimum(right, hi, out=right)
    for _ in range(max_shrink):
        prop = left + rng.random(x.shape[0]) * (right - left)
        lp = logdens(prop)
        if lp > level:
            return prop, lp
        below = prop < x
        left[below] = prop[below]
        right[~below] = prop[~below]
    raise SamplerError("slice shrinkage failed to find an acceptable point")


def _run_chain(logdens, lo, hi, n_keep, burn_in, thinning, widths, rng):
    span = hi - lo
    x = None
    for _ in range(100):
        cand = lo + span * rng.random(lo.shape[0])
        lp = logdens(cand)
        if np.isfinite(lp):
            x = cand
            break
    if x is None:
        raise SamplerError("no in-domain starting point with positive density found")
    for _ in range(burn_in):
        x, lp = _slice_step(x, lp, logdens, widths, lo, hi, rng)
    out = np.empty((n_keep, lo.shape[0]))
    for i in range(n_keep):
        for _ in range(thinning):
            x, lp = _slice_step(x, lp, logdens, widths, lo, hi, rng)
        out[i] = x
    return out


def sample_mu_u(u: Callable, domain: Domain, count: int,
                cfg: ChainConfig | None = None) -> np.ndarray:
    """Draw ``count`` points approximately distributed as u * drho / ||u||_1.

    ``u`` maps an (m, dim) batch of domain points to positive values.
    Deterministic given the ChainConfig seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cfg = cfg or ChainConfig()
    lo = domain.chain_bounds[:, 0].copy()
    hi = domain.chain_bounds[:, 1].copy()
    thinning = cfg.thinning if cfg.thinning is not None else max(1, domain.chain_dim)
    widths = (
        np.asarray(cfg.width, dtype=float)
        if cfg.width is not None
        else (hi - lo)
    )
    if widths.shape != lo.shape:
        raise ValueError("width must have one entry per chart dimension")

    def logdens(params):
        if np.any(params < lo) or np.any(params > hi):
            return -np.inf
        val = u(domain.chain_to_point(params[None, :]))[0]
        return np.log(val) if val > 0 else -np.inf

    rngs = _spawn_rngs(cfg.seed, cfg.chains)
    counts = [count // cfg.chains] * cfg.chains
    for i in range(count % cfg.chains):
        counts[i] += 1
    params = np.concatenate(
        [
            _run_chain(logdens, lo, hi, c, cfg.burn_in, thinning, widths, rng)
            for c, rng in zip(counts, rngs)
            if c > 0
        ]
    )
    return domain.chain_to_point(params)


def estimate_l1_norm(u: Callable, domain: Domain, method: str = "quadrature",
                     count: int = 10_000, seed: int = 0) -> float:
    """||u||_{L^1_rho}: quadrature sum or a Monte Carlo mean over rho-draws."""
    if method == "quadrature":
        nodes, weights = domain.quadrature()
        est = float(np.dot(weights, u(nodes)))
    elif method == "monte-carlo":
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.default_rng(seed)
        est = float(np.mean(u(domain.rho_sampler(rng, count))))
    else:
        raise ValueError(f"unknown method {method!r}")
    if not est > 0:
        raise DataError(f"||u||_1 estimate is nonpositive: {est}")
    return est


def _log_term(n_eps: float) -> float:
    # guard so small numerical dimensions never zero the weights
    return max(np.log(n_eps), 1.0)


def make_batch(points, u: Callable | None, l1: float, rule: str = "normalized",
               c1: float | None = None, n_eps: float | None = None,
               u_values: np.ndarray | None = None, meta: dict | None = None) -> SampleBatch:
    """Attach least-squares weights to sampled points.

    rules:
      * ``normalized``   w_k = ||u||_1 / (u(x_k) m)   (importance weights / m)
      * ``practical``    w_k = 1 / (c1 u(x_k))
      * ``algorithm1``   w_k = 1 / (c1 u(x_k) log(n_eps))
    """
    if l1 <= 0:
        raise ValueError("l1 must be positive")
    points = np.asarray(points)
    vals = np.asarray(u_values if u_values is not None else u(points), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise DataError("u must be positive and finite at every sample point")
    m = points.shape[0]
    if rule == "normalized":
        weights = l1 / (vals * m)
    elif rule == "practical":
        weights = 1.0 / (c1 * vals)
    elif rule == "algorithm1":
        weights = 1.0 / (c1 * vals * _log_term(n_eps))
    else:
        raise ValueError(f"unknown weight rule {rule!r}")
    info = {"rule": rule, "l1": l1, "m": m}
    if c1 is not None:
        info["c1"] = c1
    if n_eps is not None:
        info["n_eps"] = n_eps
    if meta:
        info.update(meta)
    info.setdefault("digest", _meta_digest(info))
    return SampleBatch(points=points, weights=weights, u_values=vals, meta=info)


def make_uniform_batch(domain: Domain, count: int, seed: int) -> SampleBatch:
    """i.i.d. rho-draws with the flat weights w_k = 1/m (baseline sampler)."""
    rng = np.random.default_rng(seed)
    pts = domain.rho_sampler(rng, count)
    return SampleBatch(
        points=pts,
        weights=np.full(count, 1.0 / count),
        u_values=np.ones(count),
        meta={"rule": "uniform", "seed": seed, "m": count, "digest": f"uniform-{seed}-{count}"},
    )


def _meta_digest(info: dict) -> str:
    text = json.dumps({k: repr(v) for k, v in sorted(info.items())}, sort_keys=True)
    return hashlib.sha1(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# CSV serialization: columns x_1..x_d, weight, u_value
# ---------------------------------------------------------------------------
def save_batch_csv(path, batch: SampleBatch) -> None:
    d = batch.points.shape[1]
    meta = {k: v for k, v in batch.meta.items() if isinstance(v, (str, int, float, bool))}
    with open(path, "w") as fh:
        fh.write(f"# meta: {json.dumps(meta, sort_keys=True)}\n")
        fh.write(",".join([f"x_{i + 1}" for i in range(d)] + ["weight", "u_value"]) + "\n")
        for row, w, uv in zip(batch.points, batch.weights, batch.u_values):
            cells = [f"{v:.17e}" for v in row] + [f"{w:.17e}", f"{uv:.17e}"]
            fh.write(",".join(cells) + "\n")


def load_batch_csv(path) -> SampleBatch:
    with open(path) as fh:
        first = fh.readline()
        meta = json.loads(first.split("# meta:", 1)[1]) if first.startswith("# meta:") else {}
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    d = len([h for h in header if h.startswith("x_")])
    return SampleBatch(
        points=data[:, :d],
        weights=data[:, d],
        u_values=data[:, d + 1],
        meta=meta,
    )
