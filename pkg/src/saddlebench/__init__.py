"""saddlebench: optimistic mirror descent for constrained saddle-point
problems, exact matrix-game equilibria, and last-iterate convergence
experiments."""

from .geometry import (
    Box,
    CurvedRegion,
    HalfspacePolytope,
    Product,
    Regularizer,
    Simplex,
    bregman,
    contains,
    diameter,
    kl_joint,
    project,
)
from .problems import (
    BilinearPolytope,
    CurvedBilinear,
    JointPoint,
    MatrixGame,
    PowerToy,
    Problem,
    StronglyConvexToy,
    default_initial,
    gradient_field,
    multi_ne_game,
    objective,
    random_matrix_game,
    smoothness,
)
from .solvers import SolverConfig, Trajectory, omd_step, run
from .equilibrium import (
    EquilibriumInfo,
    LpSolution,
    derived_constants,
    distance_to_equilibria,
    epsilon_constant,
    estimate_cx_cy,
    is_unique,
    simplex_lp,
    solve_matrix_game,
    xi_constant,
)
from .analysis import (
    LyapunovTrace,
    MetricSeries,
    SpmsEstimate,
    average_duality_gap,
    duality_gap_matrix,
    fit_spms,
    lemma1_check,
    predicted_bound,
    recursion_bound_check,
    spms_ratio,
    theta_zeta_trace,
)
from .numerics import (
    RateFit,
    fit_log_linear,
    fit_log_log,
    operator_norm,
    splitmix_next,
    uniform_pm1,
)

__version__ = "0.1.0"
