import numpy as np
import pytest
from scipy import stats

from rcs.basis import make_constant_basis, make_fourier_torus_basis
from rcs.christoffel import GramMatrix, KEpsEvaluator, gram_dense, gram_weighted
from rcs.domains import box_domain
from rcs.errors import DataError
from rcs.sampler import (
    ChainConfig,
    SampleBatch,
    estimate_l1_norm,
    load_batch_csv,
    make_batch,
    make_uniform_batch,
    sample_mu_u,
    save_batch_csv,
)

UNIT = make_constant_basis().domain


def test_constant_u_reproduces_rho():
    # constant density: every slice proposal is accepted, draws are iid rho
    pts = sample_mu_u(lambda p: np.full(p.shape[0], 3.0), UNIT, 10_000,
                      ChainConfig(seed=0, burn_in=10))
    rng = np.random.default_rng(123)
    direct = rng.uniform(0, 1, 10_000)
    assert stats.ks_2samp(pts[:, 0], direct).pvalue > 0.01


def test_linear_u_has_square_cdf():
    pts = sample_mu_u(lambda p: p[:, 0], UNIT, 10_000,
                      ChainConfig(seed=1, burn_in=100, thinning=5))
    assert stats.kstest(pts[:, 0], lambda v: v**2).pvalue > 0.01


def test_2d_constant_u_coordinate_means():
    dom = box_domain([[0.0, 1.0], [0.0, 1.0]], nodes_axis=8)
    pts = sample_mu_u(lambda p: np.ones(p.shape[0]), dom, 10_000, ChainConfig(seed=2))
    np.testing.assert_allclose(pts.mean(axis=0), [0.5, 0.5], atol=0.02)


def test_determinism():
    cfg = ChainConfig(seed=42, burn_in=20, thinning=2)
    u = lambda p: 1.0 + p[:, 0] ** 2
    a = sample_mu_u(u, UNIT, 500, cfg)
    b = sample_mu_u(u, UNIT, 500, cfg)
    np.testing.assert_array_equal(a, b)


def test_multiple_chains_split_counts():
    cfg = ChainConfig(seed=3, burn_in=10, chains=3)
    pts = sample_mu_u(lambda p: np.ones(p.shape[0]), UNIT, 101, cfg)
    assert pts.shape == (101, 1)


def test_importance_sampling_identity():
    # E_mu_u[w_u f] = int f drho for the half-domain indicator
    u = lambda p: 0.5 + p[:, 0]
    l1 = estimate_l1_norm(u, UNIT, "quadrature")
    pts = sample_mu_u(u, UNIT, 10_000, ChainConfig(seed=4, burn_in=100, thinning=3))
    w_u = l1 / u(pts)
    f = (pts[:, 0] < 0.5).astype(float)
    est = np.mean(w_u * f)
    sigma = np.std(w_u * f) / np.sqrt(len(pts))
    assert abs(est - 0.5) < 3 * max(sigma, 1e-3)


def test_weighted_gram_consistency_improves_with_m():
    b = make_fourier_torus_basis(1, 0, 0)
    G_ref = gram_dense(b, 200_000, seed=9).entries
    eps = 1e-6
    ev = KEpsEvaluator.from_gram(b, GramMatrix(np.eye(3)), eps)
    errs = []
    for m in (1000, 10_000):
        pts = sample_mu_u(ev, b.domain, m, ChainConfig(seed=5, burn_in=100, thinning=2))
        batch = make_batch(pts, ev, 3.0 / (1 + eps**2), rule="normalized")
        Gm = gram_weighted(b, batch.points, batch.weights).entries
        errs.append(np.abs(Gm - G_ref).max())
    assert errs[1] < errs[0]


def test_estimate_l1_constant():
    u = lambda p: np.full(p.shape[0], 7.0)
    np.testing.assert_allclose(estimate_l1_norm(u, UNIT, "quadrature"), 7.0, rtol=1e-14)
    np.testing.assert_allclose(
        estimate_l1_norm(u, UNIT, "monte-carlo", count=100, seed=0), 7.0, rtol=1e-14
    )


def test_estimate_l1_linear():
    u = lambda p: p[:, 0]
    np.testing.assert_allclose(estimate_l1_norm(u, UNIT, "quadrature"), 0.5, rtol=1e-13)
    mc = estimate_l1_norm(u, UNIT, "monte-carlo", count=100_000, seed=1)
    assert abs(mc - 0.5) < 0.01


def test_estimate_l1_torus_keps_equals_dimension():
    b = make_fourier_torus_basis(1, 1, 0)
    eps = 1e-7
    ev = KEpsEvaluator.from_gram(b, GramMatrix(np.eye(9)), eps)
    est = estimate_l1_norm(ev, b.domain, "quadrature")
    np.testing.assert_allclose(est, 9.0 / (1 + eps**2), rtol=1e-10)


def test_make_batch_rules():
    pts = np.linspace(0.1, 0.9, 5).reshape(-1, 1)
    u = lambda p: np.full(p.shape[0], 2.0)
    b1 = make_batch(pts, u, l1=2.0, rule="normalized")
    np.testing.assert_allclose(b1.weights, 1.0 / 5.0)
    b2 = make_batch(pts, u, l1=2.0, rule="practical", c1=5.0)
    np.testing.assert_allclose(b2.weights, 0.1)
    # log(n_eps) = 1 for n_eps = e reduces algorithm1 to practical
    b3 = make_batch(pts, u, l1=2.0, rule="algorithm1", c1=5.0, n_eps=np.e)
    np.testing.assert_allclose(b3.weights, b2.weights, rtol=1e-15)


def test_make_batch_rejects_nonpositive_u():
    pts = np.array([[0.5]])
    with pytest.raises(DataError):
        make_batch(pts, lambda p: np.zeros(p.shape[0]), l1=1.0)


def test_uniform_batch():
    batch = make_uniform_batch(UNIT, 50, seed=3)
    np.testing.assert_allclose(batch.weights, 1.0 / 50.0)
    assert UNIT.contains(batch.points).all()


def test_batch_csv_roundtrip(tmp_path):
    pts = np.random.default_rng(0).uniform(0, 1, (20, 1))
    batch = make_batch(pts, lambda p: 1.0 + p[:, 0], l1=1.5, rule="normalized",
                       meta={"note": "roundtrip"})
    path = tmp_path / "batch.csv"
    save_batch_csv(path, batch)
    back = load_batch_csv(path)
    np.testing.assert_array_equal(back.points, batch.points)
    np.testing.assert_array_equal(back.weights, batch.weights)
    np.testing.assert_array_equal(back.u_values, batch.u_values)
    assert back.meta["note"] == "roundtrip"
    assert back.meta["digest"] == batch.meta["digest"]


def test_batch_validates_lengths():
    with pytest.raises(DataError):
        SampleBatch(points=np.ones((3, 1)), weights=np.ones(2), u_values=np.ones(3))
