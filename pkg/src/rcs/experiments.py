"""Experiment harness: seeded replicate runs, CSV emission, and plots.

Master seed policy: replicate r of an experiment derives its stream from
``SeedSequence([master_seed, r])``; inside one run the refinement loop
derives per-iteration chain seeds the same way (see refine.run_rcs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .basis import (
    BasisSet,
    basis_from_config,
    make_fourier_torus_basis,
    make_lightning_basis,
    make_weighted_poly_basis,
)
from .christoffel import (
    KEpsEvaluator,
    cap_estimate,
    default_eps,
    design_numerical_dimension,
    gram_quadrature,
)
from .lsq import fit, l2_error, oracle_projection, resolve_target
from .refine import RcsConfig, run_rcs
from .sampler import ChainConfig, make_uniform_batch

EXPERIMENT_NAMES = (
    "weighted-poly",
    "lightning-1d",
    "lightning-2d",
    "fourier-surface",
    "elm",
    "fourier-torus-sanity",
)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    basis_params: dict = field(default_factory=dict)
    rcs: dict = field(default_factory=dict)
    target: str | None = None
    repetitions: int = 10
    out_dir: str = "."

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.name not in EXPERIMENT_NAMES:
            raise ValueError(f"unknown experiment {self.name!r}")


def resolve_rcs_config(basis: BasisSet, raw: dict | None, seed: int | None = None) -> tuple[RcsConfig, dict]:
    """Fill in 'auto' entries of an rcs config mapping against a basis.

    Returns the config plus a plain dict echoing every resolved value, so
    output directories are self-describing.
    """
    raw = dict(raw or {})
    if seed is not None:
        raw["seed"] = seed

    eps = raw.get("eps", "auto")
    if eps in (None, "auto"):
        eps = default_eps(basis, seed=int(raw.get("seed", 0)))
    eps = float(eps)

    n_eps_bound = raw.get("n_eps_bound", "n")
    if n_eps_bound in (None, "n"):
        n_eps_bound = float(basis.n)
    elif n_eps_bound == "auto":
        # oracle shortcut for highly redundant bases; the honest blind bound is n
        n_eps_bound = min(float(basis.n), 1.2 * design_numerical_dimension(basis, eps) + 2.0)
    n_eps_bound = float(n_eps_bound)

    cap_bound = raw.get("cap_bound", "auto")
    if cap_bound in (None, "auto"):
        ev = KEpsEvaluator.from_quadrature(basis, eps)
        cap_bound = cap_estimate(basis, ev, eps, grid_size=2048)
    cap_bound = max(float(cap_bound), 1.001 * n_eps_bound)

    chain_raw = dict(raw.get("chain") or {})
    chain = ChainConfig(
        burn_in=int(chain_raw.get("burn_in", 200)),
        thinning=(None if chain_raw.get("thinning") in (None, "auto")
                  else int(chain_raw["thinning"])),
        seed=int(chain_raw.get("seed", 0)),
        chains=int(chain_raw.get("chains", 1)),
    )
    cfg = RcsConfig(
        eps=eps,
        cap_bound=cap_bound,
        n_eps_bound=n_eps_bound,
        delta=float(raw.get("delta", 0.5)),
        c1=float(raw.get("c1", 5.0)),
        c2=float(raw.get("c2", 25.0)),
        c3=float(raw.get("c3", 10.0)),
        mode=str(raw.get("mode", "practical")),
        max_iters=(None if raw.get("max_iters") in (None, "auto")
                   else int(raw["max_iters"])),
        chain=chain,
        l1_method=str(raw.get("l1_method", "quadrature")),
        seed=int(raw.get("seed", 0)),
        diagnose_n_eps=bool(raw.get("diagnose_n_eps", False)),
    )
    echo = {
        "eps": cfg.eps,
        "cap_bound": cfg.cap_bound,
        "n_eps_bound": cfg.n_eps_bound,
        "delta": cfg.delta,
        "c1": cfg.c1,
        "c2": cfg.c2,
        "c3": cfg.c3,
        "mode": cfg.mode,
        "max_iters": cfg.resolved_max_iters,
        "prune_mode": cfg.resolved_prune_mode,
        "l1_method": cfg.l1_method,
        "seed": cfg.seed,
        "chain": {
            "burn_in": chain.burn_in,
            "thinning": chain.thinning,
            "chains": chain.chains,
        },
    }
    return cfg, echo


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17e}"


def _geomean(values: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(values))))


def _convergence_grid(name: str, params: dict) -> list[tuple[str, BasisSet]]:
    if name == "weighted-poly":
        pairs = params.get("n_grid") or [[5, 5], [10, 10], [20, 20]]
        return [
            (f"n={n1 + n2}", make_weighted_poly_basis(int(n1), int(n2)))
            for n1, n2 in pairs
        ]
    if name == "lightning-1d":
        n1_grid = params.get("n1_grid") or [5, 10, 20, 40]
        out = []
        for n1 in n1_grid:
            n2 = int(params.get("n2") or round(2.0 * math.sqrt(n1)))
            out.append((f"n1={n1}", make_lightning_basis(int(n1), n2)))
        return out
    raise ValueError(f"{name} is not a convergence experiment")


def run_convergence_experiment(spec: ExperimentSpec, quiet: bool = False) -> dict:
    """Error-vs-n study with paired refinement and uniform baselines.

    Per basis size and replicate: run the refinement sampler, fit the
    target, and fit again from the same number of uniform rho-draws; emit
    per-replicate errors, geometric means, and log-space spread bands.
    """
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target_name = spec.target or ("sumframe" if spec.name == "weighted-poly" else "sqrt")
    grid = _convergence_grid(spec.name, spec.basis_params)

    rows = []
    summary = []
    for tag, basis in grid:
        target = resolve_target(target_name, basis)
        cfg0, _ = resolve_rcs_config(basis, spec.rcs)
        c_oracle, oracle_err = oracle_projection(basis, target, cfg0.eps)
        rcs_errs, unif_errs = [], []
        for rep in range(spec.repetitions):
            seed = int(np.random.SeedSequence([cfg0.seed, rep]).generate_state(1)[0])
            cfg = replace(cfg0, seed=seed)
            report = run_rcs(basis, cfg)
            res = fit(basis, target, report.final_batch, cfg.eps)
            err = l2_error(basis, res.coefficients, target)
            ubatch = make_uniform_batch(basis.domain, len(report.final_batch), seed)
            ures = fit(basis, target, ubatch, cfg.eps)
            uerr = l2_error(basis, ures.coefficients, target)
            rcs_errs.append(err)
            unif_errs.append(uerr)
            rows.append([tag, basis.n, rep, len(report.final_batch),
                         report.n_iterations, err, uerr])
        rcs_errs = np.array(rcs_errs)
        unif_errs = np.array(unif_errs)
        lr = np.log(rcs_errs)
        lu = np.log(unif_errs)
        summary.append([
            tag, basis.n, oracle_err, float(np.linalg.norm(c_oracle)),
            _geomean(rcs_errs), _geomean(unif_errs),
            float(np.exp(lr.mean() - lr.std())), float(np.exp(lr.mean() + lr.std())),
            float(rcs_errs.min()), float(rcs_errs.max()),
            float(np.exp(lu.mean() - lu.std())), float(np.exp(lu.mean() + lu.std())),
        ])
        if not quiet:
            print(f"  {tag}: rcs geomean {_geomean(rcs_errs):.3e}  "
                  f"uniform geomean {_geomean(unif_errs):.3e}  oracle {oracle_err:.3e}")

    _write_csv(out / "errors.csv",
               ["size", "n", "rep", "samples", "iterations", "error_rcs", "error_uniform"],
               rows)
    _write_csv(out / "summary.csv",
               ["size", "n", "oracle_error", "oracle_coeff_norm",
                "geomean_rcs", "geomean_uniform",
                "rcs_band_lo", "rcs_band_hi", "rcs_min", "rcs_max",
                "uniform_band_lo", "uniform_band_hi"],
               summary)
    _plot_convergence(out / "convergence.svg", summary, spec.name, target_name)
    return {"summary": summary, "rows": rows}


def _plot_convergence(path, summary, name, target_name) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [row[1] for row in summary]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(ns, [row[4] for row in summary], "o-", label="refined sampling")
    ax.fill_between(ns, [row[6] for row in summary], [row[7] for row in summary], alpha=0.25)
    ax.plot(ns, [row[5] for row in summary], "s-", label="uniform sampling")
    ax.fill_between(ns, [row[10] for row in summary], [row[11] for row in summary], alpha=0.25)
    ax.plot(ns, [row[2] for row in summary], "k--", label="oracle projection")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("L2 error")
    ax.set_title(f"{name}: {target_name}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _field_grid(basis: BasisSet, per_axis: int) -> np.ndarray:
    dom = basis.domain
    lo, hi = dom.chain_bounds[:, 0], dom.chain_bounds[:, 1]
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(dom.chain_dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    params = np.stack([g.ravel() for g in mesh], axis=1)
    return dom.chain_to_point(params)


def run_field_experiment(spec: ExperimentSpec, quiet: bool = False) -> dict:
    """Single-instance run emitting the u field on a grid plus the samples."""
    from .sampler import save_batch_csv

    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = dict(spec.basis_params)
    if spec.name == "lightning-2d":
        params.setdefault("family", "lightning-2d")
        params.setdefault("n1", 15)
        params.setdefault("n2", 3)
        params.setdefault("n3", 10)
    elif spec.name == "fourier-surface":
        params.setdefault("family", "fourier-surface")
        for k in ("nx", "ny", "nz"):
            params.setdefault(k, 2)
    elif spec.name == "elm":
        params.setdefault("family", "elm")
        params.setdefault("n", 600)
        params.setdefault("seed", 0)
    else:
        raise ValueError(f"{spec.name} is not a field experiment")
    basis = basis_from_config(params)
    rcs_raw = dict(spec.rcs)
    if spec.name == "elm":
        rcs_raw.setdefault("n_eps_bound", "auto")  # sigmoid features are very redundant
    cfg, echo = resolve_rcs_config(basis, rcs_raw)
    report = run_rcs(basis, cfg)

    grid = _field_grid(basis, int(spec.basis_params.get("field_grid", 100)))
    u_vals = report.final_stack.values(basis, grid)
    header = [f"x_{i + 1}" for i in range(basis.domain.dim)] + ["u"]
    _write_csv(out / "u_field.csv", header, np.column_stack([grid, u_vals]))
    save_batch_csv(out / "samples.csv", report.final_batch)
    _plot_field(out / "u_field.svg", basis, grid, u_vals, report.final_batch.points)
    if not quiet:
        print(f"  {basis.label}: {report.n_iterations} iterations, "
              f"{len(report.final_batch)} samples")
    return {"report": report, "echo": echo}


def _plot_field(path, basis, grid, u_vals, samples) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
    if basis.domain.dim == 2:
        sc = axes[0].scatter(grid[:, 0], grid[:, 1], c=np.log10(u_vals), s=4, cmap="viridis")
        fig.colorbar(sc, ax=axes[0], label="log10 u")
        axes[1].plot(samples[:, 0], samples[:, 1], ".", ms=2)
    else:
        sc = axes[0].scatter(grid[:, 0], grid[:, 1], c=np.log10(u_vals), s=4, cmap="viridis")
        fig.colorbar(sc, ax=axes[0], label="log10 u (first two coords)")
        axes[1].plot(samples[:, 0], samples[:, 1], ".", ms=2)
    axes[0].set_title(f"u field: {basis.label}")
    axes[1].set_title("sample points")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def run_torus_sanity(spec: ExperimentSpec, quiet: bool = False) -> dict:
    """Orthonormal sanity fixture: iteration counts and deviation of u from
    the known constant value n/(1+eps^2), across seeded replicates."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = dict(spec.basis_params)
    nx, ny, nz = int(p.get("nx", 1)), int(p.get("ny", 1)), int(p.get("nz", 0))
    basis = make_fourier_torus_basis(nx, ny, nz)
    cfg0, echo = resolve_rcs_config(basis, spec.rcs)
    expected = basis.n / (1.0 + cfg0.eps**2)
    grid = _field_grid(basis, 10)
    rows = []
    for rep in range(spec.repetitions):
        seed = int(np.random.SeedSequence([cfg0.seed, rep]).generate_state(1)[0])
        report = run_rcs(basis, replace(cfg0, seed=seed))
        u_vals = report.final_stack.values(basis, grid)
        dev = float(np.max(np.abs(u_vals - expected)) / expected)
        rows.append([rep, report.n_iterations, len(report.final_batch), dev])
        if not quiet:
            print(f"  rep {rep}: {report.n_iterations} iterations, max deviation {dev:.3f}")
    _write_csv(out / "sanity.csv", ["rep", "iterations", "samples", "max_rel_deviation"], rows)
    return {"rows": rows, "echo": echo}


def run_experiment(spec: ExperimentSpec, quiet: bool = False) -> dict:
    if spec.name in ("weighted-poly", "lightning-1d"):
        return run_convergence_experiment(spec, quiet=quiet)
    if spec.name in ("lightning-2d", "fourier-surface", "elm"):
        return run_field_experiment(spec, quiet=quiet)
    if spec.name == "fourier-torus-sanity":
        return run_torus_sanity(spec, quiet=quiet)
    raise ValueError(f"unknown experiment {spec.name!r}")
