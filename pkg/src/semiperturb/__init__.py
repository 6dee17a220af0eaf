"""Consistent semigroups on discretised Lp scales and their perturbation inequalities."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DimensionError,
    DivergenceError,
    DomainError,
    DominationError,
    HypothesisError,
    InapplicableError,
    PairingError,
    PositivityError,
    PrecisionError,
    SingularityError,
)
from .numerics import (
    QuadratureSpec,
    duhamel_block,
    laplace_quadrature,
    mat_exp,
    solve_resolvent,
)
from .spaces import (
    Cone,
    Element,
    GridSpace,
    cone_contains,
    cone_samples,
    dual_pair,
    intersection_norm,
    orthant,
    p_norm,
    sum_norm,
)
from .semigroups import (
    SemigroupHandle,
    build_delay_generator,
    check_consistency,
    check_resolvent_convergence,
    check_semigroup_law,
    estimate_bound,
    evaluate,
    gauss_weierstrass_matrix,
    lattice_space,
    matrix_semigroup,
    weak_resolvent,
)
from .scenarios import (
    Scenario,
    scenario_delay,
    scenario_heat_drift,
    scenario_metzler_random,
    scenario_rank_one_Linfty,
    scenario_rank_one_Lp,
)
from .verifier import (
    StatementReport,
    check_cone_invariance,
    check_corollary,
    check_equivalence,
    check_extra_assumption,
    check_statement_a,
    check_statement_b,
    check_statement_c,
    check_strong_inequality,
    check_voc_identity,
)
