"""Spectral shift functions for Hilbert-Schmidt perturbations of Hermitian matrices.

Core pieces: the Koplienko shift ``eta`` (second order) and Krein shift ``xi``
as exact step functions, Frechet derivatives via double operator integrals,
Weyl-von Neumann finite-rank reductions, and seeded convergence experiments.
"""

from .estimators import KoplienkoShift, WeylVonNeumannProjector
from .exceptions import *  # noqa: F401,F403
from .frechet import (
    doi_divided_difference,
    frechet_exp,
    frechet_poly,
    frechet_schwartz,
    gauss_legendre,
    path_derivative_check,
    poly_matrix,
    second_order_remainder_exp,
)
from .functions import FunctionSpec, bounded_test, exponential, gaussian, monomial, polynomial, schwartz
from .harness import (
    ConvergenceTable,
    Scenario,
    build_pair,
    run_eta_cauchy,
    run_exponential_convergence,
    run_polynomial_convergence,
    run_unbounded_demo,
)
from .linalg import (
    SelfAdjointOperator,
    SpectralDecomposition,
    apply_function,
    eigendecompose,
    make_self_adjoint,
    norms_and_trace,
    op_norm,
    spectral_projector,
)
from .pcf import PiecewiseConstantFunction, integrate_pcf, l1_distance
from .scenario import parse_scenario, serialize_scenario
from .shift import (
    PerturbationPair,
    VerificationReport,
    eta_positivity_and_support,
    koplienko_eta,
    krein_xi,
    verify_exponential_formula,
    verify_krein_formula,
    verify_polynomial_formula,
    verify_schwartz_formula,
)
from .wvn import (
    ProjectionBasis,
    SliceConfig,
    choose_slice_count,
    compress,
    perturbation_truncation,
    spectral_window,
    wvn_pair_projection,
    wvn_projection,
)

__version__ = "0.1.0"
