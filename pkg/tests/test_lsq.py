import numpy as np
import pytest

from rcs.basis import (
    make_chebyshev_basis,
    make_constant_basis,
    make_fourier_torus_basis,
    make_lightning_basis,
)
from rcs.christoffel import gram_quadrature
from rcs.errors import CapabilityError
from rcs.lsq import (
    fit,
    l2_error,
    load_fit_csv,
    oracle_best_error,
    oracle_projection,
    resolve_target,
    save_fit_csv,
    sqrt_target,
    weighted_poly_target,
)
from rcs.sampler import make_uniform_batch


def test_fit_recovers_exactly_representable_target():
    b = make_constant_basis()
    batch = make_uniform_batch(b.domain, 30, seed=0)
    res = fit(b, lambda p: np.ones(p.shape[0]), batch, eps=0.0)
    np.testing.assert_allclose(res.coefficients, [1.0], atol=1e-12)
    assert res.residual_norm <= 1e-12


def test_fit_zero_target_gives_zero_coefficients():
    b = make_chebyshev_basis(5)
    batch = make_uniform_batch(b.domain, 40, seed=1)
    res = fit(b, lambda p: np.zeros(p.shape[0]), batch, eps=1e-3)
    np.testing.assert_array_equal(res.coefficients, np.zeros(5))


def test_ridge_shrinkage_scalar():
    # unit weights summing to 1, f = 1, eps = 1: c solves c + c = 1
    b = make_constant_basis()
    batch = make_uniform_batch(b.domain, 10, seed=2)
    res = fit(b, lambda p: np.ones(p.shape[0]), batch, eps=1.0)
    np.testing.assert_allclose(res.coefficients, [0.5], rtol=1e-12)


def test_l2_error_trivials():
    b = make_chebyshev_basis(3)
    f = resolve_target("basis:1", b)
    assert l2_error(b, [0.0, 1.0, 0.0], f) <= 1e-12
    one = resolve_target("one", b)
    np.testing.assert_allclose(l2_error(b, [0.0, 0.0, 0.0], one), 1.0, rtol=1e-12)


def test_l2_error_complex_basis_real_target_uses_real_part():
    b = make_fourier_torus_basis(1, 0, 0)
    # f = cos(2 pi x) = Re(phi for k=1); modes ordered k = -1, 0, 1
    f = lambda pts: np.cos(2 * np.pi * np.asarray(pts)[:, 0])
    coeffs = np.array([0.0, 0.0, 1.0], dtype=complex)
    assert l2_error(b, coeffs, f) <= 1e-12


def test_fit_optimality_under_perturbation():
    b = make_chebyshev_basis(6)
    batch = make_uniform_batch(b.domain, 100, seed=3)
    f = weighted_poly_target
    eps = 1e-2
    res = fit(b, f, batch, eps)

    def objective(c):
        Phi = b.eval(batch.points)
        r = f(batch.points) - Phi @ c
        return np.sum(batch.weights * np.abs(r) ** 2) + eps**2 * np.sum(np.abs(c) ** 2)

    base = objective(res.coefficients)
    rng = np.random.default_rng(4)
    for _ in range(12):
        d = rng.standard_normal(6)
        d *= 1e-3 / np.linalg.norm(d)
        assert objective(res.coefficients + d) >= base - 1e-15


def test_oracle_projection_exact_for_in_span_targets():
    b = make_chebyshev_basis(5)
    f = resolve_target("basis:3", b)
    assert oracle_best_error(b, f, None, 0.0) <= 1e-10
    G = gram_quadrature(b)
    assert oracle_best_error(b, f, G, 0.0) <= 1e-10


def test_oracle_error_orthogonal_target():
    # odd target against even-only basis: best error is ||f||
    b = make_chebyshev_basis(1)  # span{1}
    f = lambda pts: np.asarray(pts)[:, 0]
    err = oracle_best_error(b, f, None, 0.0)
    np.testing.assert_allclose(err, np.sqrt(1.0 / 3.0), rtol=1e-10)


def test_oracle_lightning_monotone_in_n():
    e_small = oracle_best_error(make_lightning_basis(10, 7), sqrt_target, None, 1e-12)
    e_big = oracle_best_error(make_lightning_basis(20, 9), sqrt_target, None, 1e-12)
    assert e_big < e_small


def test_gram_and_design_oracle_routes_agree_when_well_conditioned():
    b = make_chebyshev_basis(8)
    G = gram_quadrature(b)
    f = lambda pts: np.exp(np.asarray(pts)[:, 0])
    e1 = oracle_best_error(b, f, G, 1e-5)
    e2 = oracle_best_error(b, f, None, 1e-5)
    np.testing.assert_allclose(e1, e2, rtol=1e-6)


def test_l2_error_needs_quadrature():
    from dataclasses import replace

    b = make_chebyshev_basis(3)
    broken = replace(b.domain, quad_nodes=None, quad_weights=None)
    with pytest.raises(CapabilityError):
        l2_error(b, [1.0, 0.0, 0.0], resolve_target("one", b), domain=broken)


def test_fit_csv_roundtrip(tmp_path):
    b = make_chebyshev_basis(4)
    batch = make_uniform_batch(b.domain, 30, seed=5)
    res = fit(b, weighted_poly_target, batch, eps=1e-8)
    save_fit_csv(tmp_path / "fit.csv", res)
    back = load_fit_csv(tmp_path / "fit.csv")
    np.testing.assert_array_equal(back, res.coefficients)


def test_target_registry():
    b = make_chebyshev_basis(3)
    assert resolve_target("sumframe") is weighted_poly_target
    with pytest.raises(ValueError):
        resolve_target("no-such-target", b)
    with pytest.raises(ValueError):
        resolve_target("basis:9", b)
