"""Gradient discretisations and implicit gradient schemes for degenerate
nonlinear parabolic problems, with the diagnostic apparatus (energy ledger,
dual seminorms, compactness indicators, uniform-in-time weak metric) and a
refinement-study harness."""

from .analysis import (
    SineFamily,
    compensated_product_probe,
    dt_dual_estimate,
    energy_ledger,
    minty_residual,
    step_sum_identities,
    time_translate_norm,
    uniform_weak_distance,
    weak_metric,
)
from .discretisation import (
    GradientDiscretisation,
    PiecewiseConstantField,
    TimeGrid,
    Trajectory,
    apply_nonlinearity,
    compactness_modulus,
    consistency_defect,
    dual_seminorm,
    interpolate,
    limit_conformity_defect,
    norm_coercivity,
    reconstruct,
)
from .flux import LerayLionsOperator, check_operator_hypotheses, laplace, p_laplace, scalar_diffusion
from .harness import (
    ManufacturedProblem,
    error_gradient_zeta,
    error_uniform_nu,
    get_problem,
    pde_residual,
)
from .instances import (
    Mesh1D,
    RefinementFamily,
    TriMesh2D,
    build_mass_lumped_p1_1d,
    build_mass_lumped_p1_2d,
    refine,
)
from .nonlinearity import (
    NonlinearPair,
    PiecewiseLinear,
    check_pair_inequalities,
    get_pair,
    pair_from_graph,
)
from .scheme import ProblemSpec, SolverConfig, residual, solve, step
from .study import StudyConfig, indicators_table, run_single, run_study

__version__ = "0.1.0"
