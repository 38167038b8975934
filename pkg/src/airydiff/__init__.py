"""Uniform Airy-type asymptotics for the difference Schrodinger equation.

The package constructs and verifies asymptotic solutions of

    psi(z + h) + psi(z - h) + v(z) psi(z) = 0,   h -> 0+,

in a complex neighborhood of a simple turning point (v(z0) = -2,
v'(z0) != 0): the conformal zeta map and momentum branches, complex
Airy kernels, the coefficient recursion behind the Airy-carried
expansion W, Stokes geometry, exact solutions by direct recurrence,
and the cotangent-kernel parametrix that corrects W into an exact
solution.  The ``airydiff`` command line drives the verification
suites.
"""

__version__ = "0.1.0"

from .airy_kernel import AiryValue, ScaledAiryPair, airy_ai, scaled_pair, w_j
from .analytic_core import (
    AnalyticFunction,
    ComplexPath,
    JetResult,
    QuadratureConfig,
    cauchy_derivatives,
    integrate_from_turning_point,
    path_integral,
)
from .errors import (
    AccuracyError,
    AiryDiffError,
    BranchError,
    ConfigError,
    ContractionError,
    DeformationError,
    DomainValidityError,
    PoleError,
    QuadratureConvergenceError,
    TurningPointError,
)
from .exact_solver import (
    LatticeSolution,
    WronskianRecord,
    basis_matching,
    exact_vs_asymptotic,
    periodic_coefficients,
    propagate,
    shift_identity_check,
    wronskian,
)
from .momentum_map import (
    MomentumBranch,
    Potential,
    TurningPoint,
    ZetaMap,
    check_zeta_ode,
    find_turning_point,
    g_function,
    linear_potential,
    momentum,
    normalize_potential,
    potential_from_spec,
    quadratic_potential,
    sine_potential,
    weight_rho,
    wkb_leading,
    zeta,
)
from .parametrix import (
    KernelContext,
    NeumannSolveReport,
    WeightedCurveSpace,
    apply_D0,
    apply_R0,
    build_correction,
    default_working_curve,
    kernel_d0,
    kernel_r0,
    operator_norm_estimate,
    solve_g0,
    theta,
)
from .series_engine import (
    AsymptoticSolution,
    CoefficientSet,
    ResidualReport,
    TJet,
    apply_H,
    b1_functional,
    build_F0,
    build_G0,
    build_coefficient_set,
    c1_functional,
    evaluate_W,
    evaluate_W_scaled,
    expand_H_of_term,
    next_coefficients,
    residual_at,
    residual_sweep,
    split_step,
)
from .stokes_geometry import (
    CurveSpec,
    HorizontalNeighborhood,
    SectorLabel,
    StokesDiagram,
    classify_sector,
    horizontal_neighborhood,
    is_precanonical,
    trace_antistokes,
    trace_level_curve,
    trace_stokes,
)
