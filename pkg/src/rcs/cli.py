"""Command-line front end.

Subcommands: sample, fit, experiment, oracle, leverage.  Every subcommand
reads a YAML config (see README for the schema), writes its outputs under
--out, and echoes the fully resolved configuration so runs are
self-describing.  Exit codes: 0 success, 1 runtime failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .basis import basis_from_config
from .christoffel import (
    KEpsEvaluator,
    cap_estimate,
    cap_grid,
    design_numerical_dimension,
    gram_dense,
    gram_quadrature,
    save_stack,
)
from .errors import RcsError
from .experiments import ExperimentSpec, resolve_rcs_config, run_experiment
from .leverage import ridge_leverage_scores, verify_reweighting, whack_a_mole
from .lsq import fit, l2_error, resolve_target, save_fit_csv
from .refine import report_text, run_rcs
from .sampler import load_batch_csv, save_batch_csv


class ConfigError(ValueError):
    """Bad config file or unusable configuration: exit code 2."""


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(p) as fh:
            cfg = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return cfg


def _build_basis(cfg: dict):
    try:
        return basis_from_config(cfg.get("basis") or {})
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad basis config: {exc}") from exc


def _echo_config(out: Path, payload: dict) -> None:
    with open(out / "config_echo.yaml", "w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=True)


def cmd_sample(args) -> int:
    cfg = _load_config(args.config)
    basis = _build_basis(cfg)
    rcs_cfg, echo = resolve_rcs_config(basis, cfg.get("rcs"), seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_rcs(basis, rcs_cfg)
    save_batch_csv(out / "batch.csv", report.final_batch)
    save_stack(out / "stack.npz", report.final_stack)
    with open(out / "report.txt", "w") as fh:
        fh.write(report_text(report))
        fh.write(f"batch file: {out / 'batch.csv'}\n")
        fh.write(f"stack file: {out / 'stack.npz'}\n")
    if "a" in basis.params:  # ELM hidden parameters ride along for reproducibility
        np.savez(out / "basis_params.npz", a=basis.params["a"], b=basis.params["b"])
    _echo_config(out, {"basis": cfg.get("basis"), "rcs": echo})
    if not args.quiet:
        print(f"{basis.label}: {report.n_iterations} iterations, "
              f"{len(report.final_batch)} samples -> {out}")
        for w in report.warnings:
            print(f"warning: {w}")
    return 0


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    basis = _build_basis(cfg)
    fit_cfg = cfg.get("fit") or {}
    batch_path = fit_cfg.get("batch")
    if not batch_path:
        raise ConfigError("fit config needs a 'fit.batch' CSV path")
    if not Path(batch_path).is_file():
        raise ConfigError(f"batch file not found: {batch_path}")
    target_name = fit_cfg.get("target")
    if not target_name:
        raise ConfigError("fit config needs a 'fit.target' name")
    target = resolve_target(str(target_name), basis)
    eps = float(fit_cfg.get("eps", 0.0))
    batch = load_batch_csv(batch_path)
    if batch.points.shape[1] != basis.domain.dim:
        raise RcsError(
            f"batch dimension {batch.points.shape[1]} does not match "
            f"basis domain dimension {basis.domain.dim}"
        )
    result = fit(basis, target, batch, eps)
    err = l2_error(basis, result.coefficients, target)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_fit_csv(out / "fit.csv", result)
    with open(out / "fit_summary.txt", "w") as fh:
        fh.write(f"target: {target_name}\n")
        fh.write(f"eps: {eps:.17e}\n")
        fh.write(f"discrete_residual: {result.residual_norm:.17e}\n")
        fh.write(f"l2_error: {err:.17e}\n")
    _echo_config(out, {"basis": cfg.get("basis"), "fit": {
        "batch": str(batch_path), "target": str(target_name), "eps": eps}})
    if not args.quiet:
        print(f"fit {target_name}: residual {result.residual_norm:.3e}, "
              f"L2 error {err:.3e} -> {out}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    exp = cfg.get("experiment") or {}
    name = exp.get("name")
    try:
        spec = ExperimentSpec(
            name=str(name),
            basis_params={**(cfg.get("basis") or {}), **(exp.get("params") or {})},
            rcs=cfg.get("rcs") or {},
            target=exp.get("target"),
            repetitions=int(args.reps or exp.get("repetitions", 10)),
            out_dir=args.out,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not args.quiet:
        print(f"experiment {spec.name} ({spec.repetitions} repetitions)")
    run_experiment(spec, quiet=args.quiet)
    _echo_config(Path(args.out), {"experiment": {
        "name": spec.name, "repetitions": spec.repetitions,
        "target": spec.target, "params": spec.basis_params}, "rcs": cfg.get("rcs")})
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_config(args.config)
    basis = _build_basis(cfg)
    ocfg = cfg.get("oracle") or {}
    method = str(ocfg.get("method", "dense"))
    num_points = int(ocfg.get("num_points", 100_000))
    seed = int(args.seed if args.seed is not None else ocfg.get("seed", 0))
    grid_size = int(ocfg.get("grid", 1000))
    if method == "dense":
        rng = np.random.default_rng(seed)
        pts = basis.domain.rho_sampler(rng, num_points)
        weights = np.full(num_points, 1.0 / num_points)
        G = gram_dense(basis, num_points, seed)
    elif method == "quadrature":
        pts, weights = basis.domain.quadrature()
        G = gram_quadrature(basis)
    else:
        raise ConfigError(f"unknown oracle method {method!r}")
    eps = ocfg.get("eps", "auto")
    if eps in (None, "auto"):
        eps = 10.0 * np.finfo(float).eps * float(np.sqrt(max(G.eigenvalues[-1], 1e-300)))
    eps = float(eps)
    n_eps = design_numerical_dimension(basis, eps, pts, weights)
    ev = KEpsEvaluator.from_design(basis, pts, weights, eps)
    cap = cap_estimate(basis, ev, eps, grid_size=grid_size)
    grid = cap_grid(basis, grid_size)
    k_vals = ev.values(grid)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    G.save_csv(out / "gram.csv")
    header = [f"x_{i + 1}" for i in range(basis.domain.dim)] + ["k_eps"]
    with open(out / "k_eps_grid.csv", "w") as fh:
        fh.write(",".join(header) + "\n")
        for row, v in zip(grid, k_vals):
            fh.write(",".join(f"{c:.17e}" for c in row) + f",{v:.17e}\n")
    with open(out / "oracle_summary.txt", "w") as fh:
        fh.write(f"basis: {basis.label}\n")
        fh.write(f"gram_source: {G.source}\n")
        fh.write(f"eps: {eps:.17e}\n")
        fh.write(f"n_eps: {n_eps:.17e}\n")
        fh.write(f"cap_estimate: {cap:.17e}\n")
        fh.write(f"k_grid_max: {float(np.max(k_vals)):.17e}\n")
    _echo_config(out, {"basis": cfg.get("basis"), "oracle": {
        "method": method, "num_points": num_points, "seed": seed,
        "eps": eps, "grid": grid_size}})
    if not args.quiet:
        print(f"oracle {basis.label}: n_eps {n_eps:.3f}, cap {cap:.3e} -> {out}")
    return 0


def cmd_leverage(args) -> int:
    cfg = _load_config(args.config)
    lcfg = cfg.get("leverage") or {}
    matrix_path = lcfg.get("matrix")
    if not matrix_path or not Path(matrix_path).is_file():
        raise ConfigError("leverage config needs an existing 'leverage.matrix' CSV")
    A = np.loadtxt(matrix_path, delimiter=",", ndmin=2)
    eps = float(lcfg.get("eps", 1.0))
    profile = ridge_leverage_scores(A, eps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "scores.csv", profile.scores, delimiter=",", fmt="%.17e")

    lines = [f"n_eps_matrix: {profile.n_eps_matrix:.17e}"]
    targets = lcfg.get("u")
    if targets is not None:
        u = (np.full(A.shape[0], float(targets)) if np.isscalar(targets)
             else np.loadtxt(targets, delimiter=",", ndmin=1))
        result = whack_a_mole(A, u, eps,
                              tol=float(lcfg.get("tol", 1e-10)),
                              max_sweeps=int(lcfg.get("max_sweeps", 500)))
        np.savetxt(out / "weights.csv", result.diag_weights, delimiter=",", fmt="%.17e")
        check = verify_reweighting(A, u, eps, result)
        lines += [
            f"sweeps: {result.sweeps}",
            f"max_score_excess: {check.max_score_excess:.3e}",
            f"reweighted_mass: {check.reweighted_mass:.17e}",
            f"bounds_ok: {check.ok}",
        ]
    with open(out / "leverage_summary.txt", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if not args.quiet:
        print("\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcs",
        description="Refinement-based Christoffel sampling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in [
        ("sample", cmd_sample, "run the refinement loop and write the sample batch"),
        ("fit", cmd_fit, "weighted least-squares fit from a batch CSV"),
        ("experiment", cmd_experiment, "run a named experiment suite"),
        ("oracle", cmd_oracle, "dense-grid Gram, k_eps grid, and cap estimate"),
        ("leverage", cmd_leverage, "ridge leverage scores / row reweighting on a CSV matrix"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--reps", type=int, default=None, help="override repetitions")
        p.add_argument("--quiet", action="store_true")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:  # console-script entry point
    sys.exit(main())


if __name__ == "__main__":
    entry()
