import numpy as np
import pytest
import yaml

from rcs.cli import main
from rcs.sampler import load_batch_csv


def write_yaml(path, payload):
    with open(path, "w") as fh:
        yaml.safe_dump(payload, fh)
    return str(path)


@pytest.fixture
def constant_cfg(tmp_path):
    return write_yaml(tmp_path / "c.yaml", {
        "basis": {"family": "constant"},
        "rcs": {"eps": 1.0e-6, "cap_bound": 2.0, "n_eps_bound": 1.0, "seed": 5},
    })


def test_sample_constant_zero_iterations(tmp_path, constant_cfg):
    out = tmp_path / "out"
    assert main(["sample", "--config", constant_cfg, "--out", str(out), "--quiet"]) == 0
    batch = load_batch_csv(out / "batch.csv")
    assert len(batch) == 20
    assert np.unique(batch.weights).size == 1  # all weights equal
    assert (out / "report.txt").is_file() and (out / "stack.npz").is_file()
    assert (out / "config_echo.yaml").is_file()


def test_sample_byte_identical_across_runs(tmp_path):
    cfg = write_yaml(tmp_path / "wp.yaml", {
        "basis": {"family": "weighted-poly", "n1": 4, "n2": 4},
        "rcs": {"eps": 1.0e-10, "cap_bound": 500.0, "n_eps_bound": 8.0, "seed": 3,
                "chain": {"burn_in": 30, "thinning": 1}},
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["sample", "--config", cfg, "--out", str(out1), "--quiet"]) == 0
    assert main(["sample", "--config", cfg, "--out", str(out2), "--quiet"]) == 0
    assert (out1 / "batch.csv").read_bytes() == (out2 / "batch.csv").read_bytes()


def test_missing_config_exits_2(tmp_path):
    assert main(["sample", "--config", str(tmp_path / "nope.yaml"),
                 "--out", str(tmp_path)]) == 2


def test_bad_family_exits_2(tmp_path):
    cfg = write_yaml(tmp_path / "bad.yaml", {"basis": {"family": "nope"}})
    assert main(["sample", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_fit_subcommand(tmp_path, constant_cfg):
    out = tmp_path / "out"
    main(["sample", "--config", constant_cfg, "--out", str(out), "--quiet"])
    fit_cfg = write_yaml(tmp_path / "fit.yaml", {
        "basis": {"family": "constant"},
        "fit": {"batch": str(out / "batch.csv"), "target": "basis:0", "eps": 0.0},
    })
    assert main(["fit", "--config", fit_cfg, "--out", str(tmp_path / "fitout"), "--quiet"]) == 0
    summary = (tmp_path / "fitout" / "fit_summary.txt").read_text()
    l2 = float([ln for ln in summary.splitlines() if ln.startswith("l2_error")][0].split(":")[1])
    assert l2 <= 1e-10


def test_fit_dimension_mismatch_exits_1(tmp_path, constant_cfg):
    out = tmp_path / "out"
    main(["sample", "--config", constant_cfg, "--out", str(out), "--quiet"])
    fit_cfg = write_yaml(tmp_path / "fit.yaml", {
        "basis": {"family": "elm", "n": 4, "seed": 0},  # 2-d domain vs 1-d batch
        "fit": {"batch": str(out / "batch.csv"), "target": "one", "eps": 0.0},
    })
    assert main(["fit", "--config", fit_cfg, "--out", str(tmp_path / "f2")]) == 1


def test_oracle_subcommand(tmp_path):
    cfg = write_yaml(tmp_path / "o.yaml", {
        "basis": {"family": "constant"},
        "oracle": {"num_points": 2000, "grid": 64, "eps": 0.1},
    })
    out = tmp_path / "orc"
    assert main(["oracle", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    summary = (out / "oracle_summary.txt").read_text()
    cap = float([ln for ln in summary.splitlines() if ln.startswith("cap")][0].split(":")[1])
    np.testing.assert_allclose(cap, 2.0 / 1.01, rtol=1e-6)
    grid = np.loadtxt(out / "k_eps_grid.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(grid[:, 1], 1.0 / 1.01, rtol=1e-6)
    # emitted gram CSV round-trips at full precision
    G = np.loadtxt(out / "gram.csv", delimiter=",", ndmin=2)
    np.testing.assert_allclose(G, [[1.0]], rtol=1e-14)


def test_oracle_torus_dimension(tmp_path):
    cfg = write_yaml(tmp_path / "t.yaml", {
        "basis": {"family": "fourier-torus", "nx": 1, "ny": 1, "nz": 0},
        "oracle": {"method": "dense", "num_points": 100000, "grid": 200, "eps": 1.0e-7},
    })
    out = tmp_path / "orc"
    assert main(["oracle", "--config", cfg, "--out", str(out), "--seed", "1", "--quiet"]) == 0
    summary = (out / "oracle_summary.txt").read_text()
    n_eps = float([ln for ln in summary.splitlines() if ln.startswith("n_eps")][0].split(":")[1])
    assert abs(n_eps - 9.0) / 9.0 < 0.01


def test_experiment_unknown_name_exits_2(tmp_path):
    cfg = write_yaml(tmp_path / "e.yaml", {"experiment": {"name": "nope"}})
    assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "e")]) == 2


def test_experiment_torus_sanity(tmp_path):
    cfg = write_yaml(tmp_path / "ts.yaml", {
        "experiment": {"name": "fourier-torus-sanity", "repetitions": 2},
        "basis": {"nx": 1, "ny": 1, "nz": 0},
        "rcs": {"eps": 1.0e-7, "cap_bound": 10.8, "n_eps_bound": 9.0, "seed": 0,
                "chain": {"burn_in": 30, "thinning": 1}},
    })
    out = tmp_path / "ts"
    assert main(["experiment", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    rows = np.loadtxt(out / "sanity.csv", delimiter=",", skiprows=1, ndmin=2)
    assert rows.shape[0] == 2
    assert np.all(rows[:, 1] <= 2)  # iterations


def test_experiment_weighted_poly_convergence(tmp_path):
    cfg = write_yaml(tmp_path / "wp.yaml", {
        "experiment": {"name": "weighted-poly", "repetitions": 2,
                       "params": {"n_grid": [[2, 2], [4, 4]]}},
        "rcs": {"eps": 1.0e-10, "seed": 1, "chain": {"burn_in": 30, "thinning": 1}},
    })
    out = tmp_path / "wp"
    assert main(["experiment", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    assert (out / "errors.csv").is_file()
    assert (out / "convergence.svg").is_file()
    rows = np.loadtxt(out / "summary.csv", delimiter=",", skiprows=1,
                      usecols=(1, 2, 4), ndmin=2)
    assert rows.shape[0] == 2
    assert rows[1, 2] < rows[0, 2]  # geometric-mean error decreases with n


def test_experiment_fourier_surface_scatter_on_surface(tmp_path):
    cfg = write_yaml(tmp_path / "fs.yaml", {
        "experiment": {"name": "fourier-surface",
                       "params": {"nx": 1, "ny": 1, "nz": 0, "field_grid": 12}},
        "rcs": {"seed": 0, "chain": {"burn_in": 30, "thinning": 1}},
    })
    out = tmp_path / "fs"
    assert main(["experiment", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    from rcs.basis import make_fourier_surface_basis

    batch = load_batch_csv(out / "samples.csv")
    dom = make_fourier_surface_basis(1, 1, 0).domain
    assert dom.contains(batch.points).all()  # every sample on the cube surface
    field = np.loadtxt(out / "u_field.csv", delimiter=",", skiprows=1, ndmin=2)
    assert field.shape[1] == 4  # x, y, z, u
    assert np.all(field[:, 3] > 0)


def test_experiment_elm_field(tmp_path):
    cfg = write_yaml(tmp_path / "elm.yaml", {
        "experiment": {"name": "elm",
                       "params": {"n": 25, "seed": 2, "field_grid": 10}},
        "rcs": {"seed": 0, "chain": {"burn_in": 30, "thinning": 1}},
    })
    out = tmp_path / "elm"
    assert main(["experiment", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    field = np.loadtxt(out / "u_field.csv", delimiter=",", skiprows=1, ndmin=2)
    assert field.shape == (100, 3)  # 10x10 grid of [0,1]^2: x, y, u


def test_emitted_csvs_roundtrip_exactly(tmp_path, constant_cfg):
    out = tmp_path / "out"
    main(["sample", "--config", constant_cfg, "--out", str(out), "--quiet"])
    batch = load_batch_csv(out / "batch.csv")
    tmp = tmp_path / "rewrite.csv"
    from rcs.sampler import save_batch_csv

    save_batch_csv(tmp, batch)
    assert tmp.read_bytes() == (out / "batch.csv").read_bytes()


def test_leverage_subcommand(tmp_path):
    A = np.eye(2)
    np.savetxt(tmp_path / "A.csv", A, delimiter=",")
    cfg = write_yaml(tmp_path / "l.yaml", {
        "leverage": {"matrix": str(tmp_path / "A.csv"), "eps": 1.0, "u": 0.3},
    })
    out = tmp_path / "lev"
    assert main(["leverage", "--config", cfg, "--out", str(out), "--quiet"]) == 0
    scores = np.loadtxt(out / "scores.csv", delimiter=",")
    np.testing.assert_allclose(scores, [0.5, 0.5], rtol=1e-12)
    weights = np.loadtxt(out / "weights.csv", delimiter=",")
    np.testing.assert_allclose(weights, np.sqrt(3.0 / 7.0), atol=1e-8)
    assert "bounds_ok: True" in (out / "leverage_summary.txt").read_text()
