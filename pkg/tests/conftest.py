import pytest

from rcs import kernels
from rcs.basis import make_weighted_poly_basis
from rcs.christoffel import KEpsEvaluator, gram_dense


def pytest_configure(config):
    kernels.warm_up()


@pytest.fixture(scope="session")
def wp40():
    """The weighted-poly n=40 experiment basis."""
    return make_weighted_poly_basis(20, 20)


@pytest.fixture(scope="session")
def wp40_oracle(wp40):
    """Dense-grid oracle fixture for the n=40 basis: Gram + k_eps evaluator.

    Computed once per session from a fixed seed; key entries are frozen in
    test_christoffel to pin the fixture down.
    """
    eps = 1e-13
    G = gram_dense(wp40, 100_000, seed=0)
    ev = KEpsEvaluator.from_dense(wp40, 100_000, seed=0, eps=eps)
    return {"G": G, "evaluator": ev, "eps": eps}
