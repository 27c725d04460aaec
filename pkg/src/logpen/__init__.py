"""Penalized variational solver for logarithmic ground states.

Computes positive ground states of -lap(u) + V(eps x) u = u log u^2 on
uniform grids, penalizing the nonlinearity outside a declared potential
well so that, for small eps, solutions concentrate at the well minimum and
solve the original equation there.
"""

from .config import ProblemSpec, load_spec, spec_from_dict, spec_to_dict
from .energy import (
    EnergyReport,
    PotentialSpec,
    ProblemContext,
    energy_I,
    energy_J,
    energy_report,
    grad_I,
    identity_gap,
    norm_eps_sq,
)
from .errors import (
    AllRestartsFailed,
    BracketFailure,
    ConeExit,
    ConeViolation,
    ConfigError,
    HypothesisViolation,
    InsufficientRows,
    LogpenError,
)
from .experiments import (
    ConcentrationReport,
    EquivalenceReport,
    GaussonReference,
    LogBoundReport,
    SweepRow,
    concentration_report,
    epsilon_sweep,
    equivalence_check,
    gausson_reference,
    log_bound_probe,
    make_context,
    sweep_box,
)
from .grid import Grid, ScalarField, build_grid, integrate, laplacian_apply
from .logsplit import (
    SplitParams,
    delta_convexity_bound,
    f1,
    f1_prime,
    f2,
    f2_prime,
)
from .nehari import FiberResult, fiber, fiber_slope, in_cone, project_nehari
from .penalty import (
    PenaltyParams,
    Region,
    build_penalty,
    choose_l,
    f2_tilde_prime,
    g2,
    g2_prime,
    solve_a0,
)
from .solver import SolveResult, SolverConfig, init_bump, multi_start, solve_ground_state

__version__ = "0.1.0"
