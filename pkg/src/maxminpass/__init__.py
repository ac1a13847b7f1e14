"""Numerical toolkit for the max-min characterization of the pass level.

Computes constrained minima i(lambda) on level sets of U, builds the level
curve I(lambda) = i(lambda) - lambda with its thresholds and argmax, and
cross-checks the max-min value against an independent path-deformation
estimate, for two radial p-Laplacian model problems and exact toy problems.
"""

from .constrained import (
    MinimizeOptions,
    MinimizeResult,
    continuation_sweep,
    default_seed,
    minimize_on_level,
    retract_to_level,
)
from .errors import (
    ConvergenceError,
    GridMismatchError,
    InfeasibleError,
    ValidationError,
)
from .functionals import (
    NonlinearitySpec,
    ProblemSpec,
    estimate_mu_p,
    eval_F,
    eval_T,
    eval_U,
    grad_T,
    grad_U,
    hardy_constant,
    inner,
    norm,
    problem_from_config,
    problem_to_config,
)
from .grids import (
    GridFunction,
    RadialGrid,
    ScalingAction,
    apply_scaling,
    build_radial_grid,
    check_tail,
    grid_from_json,
    grid_to_json,
    gridfunction_from_csv,
    gridfunction_to_csv,
    quadrature,
)
from .levelcurve import (
    LevelCurve,
    build_level_curve,
    closed_form_lambda_bar,
    evaluate_F_along_path,
    scaling_exponent,
    scaling_path,
)
from .mpa import DiscretePath, MpaOptions, crosses_all_levels, deform, estimate_c, init_path
from .toy import ToyProblem, toy_c_bruteforce, toy_closed_form, toy_i_lambda
from .verify import el_residual, multiplier_of, pick_solution_scale

__version__ = "0.1.0"
