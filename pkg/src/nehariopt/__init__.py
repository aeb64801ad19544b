"""Ground states of coupled cubic elliptic systems via Nehari manifold descent.

The library discretizes the coupled system with a sine pseudospectral method
on a square box with zero Dirichlet data and minimizes the energy over the
Nehari manifold with steepest-descent, accelerated, and safeguarded-
accelerated schemes.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateConstraintGradient,
    DegenerateInteraction,
    LineSearchFailed,
    NehariError,
    ZeroField,
)
from .model import (
    CouplingMatrix,
    Problem,
    descent_direction,
    energy,
    gradients,
    interaction_energy,
    nehari_constraint,
    nehari_scale,
    pullback,
    quadratic_energy,
    residual,
    retract,
    validate_problem,
)
from .scenarios import (
    Classification,
    PotentialSpec,
    ScenarioSpec,
    SweepRow,
    build_problem,
    classify_solution,
    example1,
    example2,
    example3,
    gaussian_initial,
    initial_field,
    randomized_initial,
    stirrer_pair,
    sweep_coupling,
    two_component_semitrivial,
)
from .solvers import (
    IterationRecord,
    MomentumState,
    NonmonotoneState,
    SolveResult,
    SolverOptions,
    armijo_search,
    extrapolate,
    momentum_next,
    nmrag_step,
    nonmonotone_update,
    rag_step,
    rsd_step,
    run,
)
from .spectral import (
    Grid,
    dst2,
    first_dirichlet_eigenvalue,
    idst2,
    make_grid,
    neg_laplacian,
    poisson_solve,
    sobolev_inner,
    sobolev_norm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
