"""Refinement-based Christoffel sampling for weighted least squares.

Builds near-optimal sampling distributions for least-squares approximation
in arbitrary (possibly numerically redundant) function systems, by
iteratively refining an upper bound on the regularized inverse Christoffel
function instead of orthogonalizing on a dense grid.
"""

from .basis import (
    BasisSet,
    basis_from_config,
    eval_basis,
    make_chebyshev_basis,
    make_constant_basis,
    make_elm_basis,
    make_fourier_surface_basis,
    make_fourier_torus_basis,
    make_lightning2d_basis,
    make_lightning_basis,
    make_weighted_poly_basis,
)
from .christoffel import (
    ChristoffelReport,
    GramMatrix,
    KEpsEvaluator,
    RFactorStack,
    cap_estimate,
    christoffel_report,
    default_eps,
    design_numerical_dimension,
    gram_dense,
    gram_quadrature,
    gram_weighted,
    k_eps,
    load_stack,
    numerical_dimension,
    save_stack,
    stack_init,
    stack_push,
    u_eval,
)
from .domains import Domain, box_domain, cube_surface_domain, interval_domain, torus_domain
from .errors import (
    CapabilityError,
    DataError,
    DomainError,
    NonTerminationError,
    RcsError,
    SamplerError,
)
from .leverage import (
    LeverageProfile,
    WeightMatrixResult,
    ridge_leverage_scores,
    verify_reweighting,
    whack_a_mole,
)
from .lsq import (
    FitResult,
    fit,
    l2_error,
    oracle_best_error,
    oracle_projection,
    resolve_target,
)
from .refine import (
    RcsConfig,
    RcsReport,
    alpha_schedule,
    build_A,
    run_rcs,
)
from .sampler import (
    ChainConfig,
    SampleBatch,
    estimate_l1_norm,
    load_batch_csv,
    make_batch,
    make_uniform_batch,
    sample_mu_u,
    save_batch_csv,
)

__version__ = "0.1.0"
