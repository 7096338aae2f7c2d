"""Archetype pursuit: extreme points of a data cloud via random linear functionals.

Finding the rows of X that are extreme points of the convex hull of all rows
gives the archetypes of an archetypal analysis and the H factor of a
separable non-negative matrix factorization; the weights follow from a single
non-negative least squares solve.  The package provides the randomized
pursuit (fixed-budget and adaptive), a simulated distributed single-pass
variant, majority-vote and non-negative group-lasso selection for noisy data,
and geometric condition-number diagnostics.
"""

from .distributed import (
    ExecutionTrace,
    Partition,
    WorkerSummary,
    count_passes,
    distributed_weights,
    run_distributed,
)
from .experiments import (
    FactorizeResult,
    NoiseSpec,
    SweepSpec,
    classify_rows,
    factorize,
    run_noise,
    run_scree,
    run_sweep,
)
from .extreme_points import (
    ExtremeSet,
    PursuitConfig,
    linear_scores,
    posterior_missed_mass,
    pursue,
    pursue_adaptive,
    select_top_voted,
)
from .geometry import (
    GeometryReport,
    LemmaCheck,
    VertexPolytope,
    check_cap_bounds,
    check_simplicial_lemmas,
    condition_kappa,
    estimate_solid_angles,
    geometry_report,
    hypercube,
    needle_simplex,
    regular_simplex,
    required_m,
    simplicial_constant,
    unit_square,
)
from .glasso import (
    GroupLassoProblem,
    LassoPath,
    default_lambda_grid,
    lambda_max,
    project_cone_orthant,
    select_by_persistence,
    solve_path,
)
from .matrix_io import (
    SeparableInstance,
    gen_hilbert_separable,
    gen_noisy_pairs,
    gen_uniform_separable,
    load_binary,
    load_csv,
    save_binary,
    save_csv,
)
from .nnls import NnlsSolution, kkt_residual, nnls_fit

__version__ = "0.1.0"

__all__ = [
    "ExecutionTrace",
    "ExtremeSet",
    "FactorizeResult",
    "GeometryReport",
    "GroupLassoProblem",
    "LassoPath",
    "LemmaCheck",
    "NnlsSolution",
    "NoiseSpec",
    "Partition",
    "PursuitConfig",
    "SeparableInstance",
    "SweepSpec",
    "VertexPolytope",
    "WorkerSummary",
    "check_cap_bounds",
    "check_simplicial_lemmas",
    "classify_rows",
    "condition_kappa",
    "count_passes",
    "default_lambda_grid",
    "distributed_weights",
    "estimate_solid_angles",
    "factorize",
    "gen_hilbert_separable",
    "gen_noisy_pairs",
    "gen_uniform_separable",
    "geometry_report",
    "hypercube",
    "kkt_residual",
    "lambda_max",
    "linear_scores",
    "load_binary",
    "load_csv",
    "needle_simplex",
    "nnls_fit",
    "posterior_missed_mass",
    "project_cone_orthant",
    "pursue",
    "pursue_adaptive",
    "regular_simplex",
    "required_m",
    "run_distributed",
    "run_noise",
    "run_scree",
    "run_sweep",
    "save_binary",
    "save_csv",
    "select_by_persistence",
    "select_top_voted",
    "simplicial_constant",
    "solve_path",
    "unit_square",
]
