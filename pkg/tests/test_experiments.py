import numpy as np

from rcs.experiments import ExperimentSpec, resolve_rcs_config, run_field_experiment
from rcs.basis import make_chebyshev_basis, make_weighted_poly_basis


def test_resolve_config_fills_auto_fields():
    b = make_weighted_poly_basis(5, 5)
    cfg, echo = resolve_rcs_config(b, {"seed": 3})
    assert cfg.eps > 0
    assert cfg.n_eps_bound == 10.0
    assert cfg.cap_bound > cfg.n_eps_bound
    assert echo["mode"] == "practical" and echo["seed"] == 3
    cfg2, _ = resolve_rcs_config(b, {"eps": 1e-6, "n_eps_bound": "auto"})
    assert cfg2.n_eps_bound <= 10.0


def test_resolve_config_auto_bound_is_upper_bound():
    b = make_chebyshev_basis(6)  # well-conditioned: n_eps ~ n
    cfg, _ = resolve_rcs_config(b, {"eps": 1e-8, "n_eps_bound": "auto"})
    assert cfg.n_eps_bound == 6.0  # min(n, 1.2 * estimate + 2) caps at n


def test_lightning2d_field_experiment(tmp_path):
    spec = ExperimentSpec(
        name="lightning-2d",
        basis_params={"n1": 2, "n2": 2, "n3": 2, "field_grid": 8},
        rcs={"seed": 0, "chain": {"burn_in": 20, "thinning": 1}},
        repetitions=1,
        out_dir=str(tmp_path),
    )
    run_field_experiment(spec, quiet=True)
    field = np.loadtxt(tmp_path / "u_field.csv", delimiter=",", skiprows=1, ndmin=2)
    assert field.shape == (64, 3)
    assert np.all(field[:, 2] > 0)  # u strictly positive on the grid
    assert (tmp_path / "u_field.svg").is_file()
