"""The refinement loop: iteratively tighten an upper bound on the
regularized inverse Christoffel function, then emit a weighted sample set.

Starting from the constant bound u = cap, each iteration draws a modest
number of points from mu_u, forms the matrix A with rows
``conj(phi(x_k)) / sqrt(c1 * u(x_k) * [log n_eps])``, pushes the thin-QR
factor of [A; eps*I] onto the factor stack (which lowers u pointwise), and
re-estimates ||u||_1.  The loop stops once ||u||_1 <= (c2/c1) * n_eps_bound,
after which the final batch is drawn and weighted.

Two modes:
  * ``faithful``  — keeps the log factors in sample counts and weights and
    retains every pushed factor;
  * ``practical`` — drops the log terms, draws ceil(c2 * n_eps_bound)
    points per iteration, sizes the final batch as ceil(c3 * ||u||_1), and
    prunes the factor stack to the first plus the last two.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisSet
from .christoffel import (
    RFactorStack,
    gram_weighted,
    ridge_dimension,
    stack_init,
    stack_push,
)
from .errors import DataError, NonTerminationError
from .sampler import (
    ChainConfig,
    SampleBatch,
    estimate_l1_norm,
    make_batch,
    sample_mu_u,
    _log_term,
)

MODES = ("faithful", "practical")


@dataclass(frozen=True)
class RcsConfig:
    eps: float
    cap_bound: float
    n_eps_bound: float
    delta: float = 0.5
    c1: float = 5.0
    c2: float = 25.0
    c3: float = 10.0
    mode: str = "practical"
    max_iters: int | None = None  # default: 10 + ceil(5 * log10(cap_bound))
    chain: ChainConfig = field(default_factory=ChainConfig)
    l1_method: str = "quadrature"  # or "monte-carlo"
    l1_mc_count: int | None = None  # default: 20 * per-iteration sample count
    seed: int = 0
    prune_mode: str | None = None  # default derived from mode
    monitor_grid: np.ndarray | None = None
    diagnose_n_eps: bool = False

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if not (self.c2 >= self.c1 >= 1.0):
            raise ValueError("need c2 >= c1 >= 1")
        if self.c3 <= 0:
            raise ValueError("c3 must be positive")
        if self.cap_bound < self.n_eps_bound:
            raise ValueError("cap_bound must be >= n_eps_bound (sup >= mean)")
        if self.n_eps_bound <= 0:
            raise ValueError("n_eps_bound must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @property
    def resolved_max_iters(self) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return 10 + math.ceil(5.0 * math.log10(max(self.cap_bound, 10.0)))

    @property
    def resolved_prune_mode(self) -> str:
        if self.prune_mode is not None:
            return self.prune_mode
        return "keep-all" if self.mode == "faithful" else "first-plus-last-two"


@dataclass(frozen=True)
class IterationRecord:
    index: int
    samples: int
    l1_estimate: float
    elapsed_s: float
    u_grid: np.ndarray | None = None


@dataclass(frozen=True)
class RcsReport:
    config: RcsConfig
    iterations: tuple[IterationRecord, ...]
    final_batch: SampleBatch
    final_stack: RFactorStack
    total_samples: int
    l1_trace: tuple[float, ...]
    warnings: tuple[str, ...] = ()

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)


def alpha_schedule(c1: float, c2: float, n_eps_bound: float, l1_estimate: float) -> float:
    """Row subsampling fraction; the loop terminates exactly when alpha > 1."""
    if min(c1, c2, n_eps_bound, l1_estimate) <= 0:
        raise ValueError("all inputs must be positive")
    return (c2 * n_eps_bound) / (c1 * l1_estimate)


def build_A(points, u_values, c1: float, n_eps_bound: float, basis: BasisSet,
            mode: str = "practical") -> np.ndarray:
    """Rows conj(phi(x_k)) / sqrt(c1 u(x_k) [log n_eps]); log dropped in practical."""
    u_values = np.asarray(u_values, dtype=float)
    if u_values.size == 0:
        raise ValueError("points must be nonempty")
    if np.any(u_values <= 0):
        raise DataError("u must be positive at every sample point")
    Phi = basis.eval(points, check=False)
    log_term = _log_term(n_eps_bound) if mode == "faithful" else 1.0
    scale = 1.0 / np.sqrt(c1 * u_values * log_term)
    return np.conj(Phi) * scale[:, None]


def _estimate_l1(u_fn, domain, cfg: RcsConfig, iteration: int, default_count: int) -> float:
    if cfg.l1_method == "quadrature" and domain.has_quadrature:
        return estimate_l1_norm(u_fn, domain, method="quadrature")
    count = cfg.l1_mc_count or 20 * default_count
    return estimate_l1_norm(
        u_fn, domain, method="monte-carlo", count=count,
        seed=np.random.SeedSequence([cfg.seed, 7_000_000 + iteration]).entropy,
    )


def run_rcs(basis: BasisSet, cfg: RcsConfig) -> RcsReport:
    """Run the refinement loop and return the final batch, stack and diagnostics.

    Seeding: iteration i's chain uses SeedSequence([seed, i]); the final
    batch uses SeedSequence([seed, 999983]).
    """
    domain = basis.domain
    log_term = _log_term(cfg.n_eps_bound)
    if cfg.mode == "faithful":
        m_iter = math.ceil(cfg.c2 * cfg.n_eps_bound * log_term + 1.0)
    else:
        m_iter = math.ceil(cfg.c2 * cfg.n_eps_bound)

    stack = stack_init(cfg.cap_bound, cfg.delta, cfg.resolved_prune_mode)
    u_fn = stack.evaluator(basis)
    l1 = _estimate_l1(u_fn, domain, cfg, 0, m_iter)
    threshold = (cfg.c2 / cfg.c1) * cfg.n_eps_bound
    records: list[IterationRecord] = []
    trace = [l1]
    total = 0
    warnings: list[str] = []

    while l1 > threshold:
        i = len(records) + 1
        if i > cfg.resolved_max_iters:
            raise NonTerminationError(
                f"refinement did not terminate in {cfg.resolved_max_iters} iterations",
                trace=trace,
            )
        t0 = time.perf_counter()
        chain = replace(cfg.chain, seed=np.random.SeedSequence([cfg.seed, i]).entropy)
        pts = sample_mu_u(u_fn, domain, m_iter, chain)
        u_vals = u_fn(pts)
        A = build_A(pts, u_vals, cfg.c1, cfg.n_eps_bound, basis, cfg.mode)
        stack = stack_push(stack, A, cfg.eps)
        u_fn = stack.evaluator(basis)
        l1 = _estimate_l1(u_fn, domain, cfg, i, m_iter)
        trace.append(l1)
        total += m_iter
        records.append(
            IterationRecord(
                index=i,
                samples=m_iter,
                l1_estimate=l1,
                elapsed_s=time.perf_counter() - t0,
                u_grid=(
                    stack.values(basis, cfg.monitor_grid)
                    if cfg.monitor_grid is not None
                    else None
                ),
            )
        )

    if cfg.mode == "faithful":
        m_final = math.ceil(cfg.c1 * l1 * log_term)
        rule = "algorithm1"
    else:
        m_final = math.ceil(cfg.c3 * l1)
        rule = "practical"
    chain = replace(cfg.chain, seed=np.random.SeedSequence([cfg.seed, 999_983]).entropy)
    pts = sample_mu_u(u_fn, domain, m_final, chain)
    batch = make_batch(
        pts,
        u_fn,
        l1,
        rule=rule,
        c1=cfg.c1,
        n_eps=cfg.n_eps_bound,
        meta={"mode": cfg.mode, "seed": cfg.seed, "iterations": len(records)},
    )
    total += m_final

    if cfg.diagnose_n_eps:
        # unreliable under-estimate (distorted whenever G_m sits near the
        # lower concentration edge); surfaced as a diagnostic only, never
        # fed back into the loop
        w_norm = l1 / (batch.u_values * len(batch))
        G_m = gram_weighted(basis, batch.points, w_norm)
        est = ridge_dimension(np.linalg.eigvalsh(G_m.entries), cfg.eps)
        warnings.append(
            f"diagnostic n_eps estimate from final batch: {est:.3f} "
            "(unreliable for redundant bases; may underestimate; not used by the loop)"
        )

    return RcsReport(
        config=cfg,
        iterations=tuple(records),
        final_batch=batch,
        final_stack=stack,
        total_samples=total,
        l1_trace=tuple(trace),
        warnings=tuple(warnings),
    )


def report_text(report: RcsReport) -> str:
    """Human-readable run summary (config echo plus per-iteration table)."""
    cfg = report.config
    lines = [
        "refinement run report",
        "=====================",
        f"mode={cfg.mode} eps={cfg.eps:.6e} delta={cfg.delta} "
        f"c1={cfg.c1} c2={cfg.c2} c3={cfg.c3}",
        f"cap_bound={cfg.cap_bound:.6e} n_eps_bound={cfg.n_eps_bound:.6f} "
        f"seed={cfg.seed} l1_method={cfg.l1_method}",
        f"chain: burn_in={cfg.chain.burn_in} thinning={cfg.chain.thinning} "
        f"chains={cfg.chain.chains}",
        "",
        f"initial ||u||_1 estimate: {report.l1_trace[0]:.6e}",
        "iter  samples  ||u||_1-estimate  elapsed[s]",
    ]
    for rec in report.iterations:
        lines.append(
            f"{rec.index:4d}  {rec.samples:7d}  {rec.l1_estimate:16.6e}  {rec.elapsed_s:9.3f}"
        )
    lines += [
        "",
        f"iterations: {report.n_iterations}",
        f"final batch size: {len(report.final_batch)}",
        f"total samples drawn: {report.total_samples}",
    ]
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"
