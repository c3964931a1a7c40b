"""Grid solver toolkit for discounted optimal control with sparse penalties.

Computes stationary value functions of infinite-horizon discounted control
problems with running costs ell1(x) + gamma * sum |u_i|^p (0 < p <= 2) on
l^q-ball or box control sets, synthesizes the associated feedback laws,
simulates closed loops, and checks first-order optimality structure. Hot
kernels run through a compiled extension when available and fall back to a
pure NumPy implementation with identical semantics.
"""

from .adjoint import AdjointTrace, StructureReport, integrate_adjoint, verify_structure
from .eikonal import EikonalPlan, oracle_trajectory, oracle_value
from .eikonal import plan as eikonal_plan
from .feedback import (
    DivergenceError,
    Trajectory,
    feedback,
    simulate,
    simulated_cost_vs_value,
)
from .grid import GridSpec, ValueField, interpolate, square_grid, zero_field
from .kernels import available_backends, get_backend
from .maximizer import (
    MaximizerResult,
    VertexConditionError,
    classify_sparsity,
    maximize_brute_force,
    maximize_closed_form,
)
from .problem import (
    ControlProblem,
    ControlSet,
    Dynamics,
    ProblemConfig,
    RunningCost,
    eikonal_dynamics,
    make_problem,
    nonlinear_test2_dynamics,
    sample_control_set,
)
from .solver import (
    SemiLagrangianOperator,
    SolveReport,
    SolverConfig,
    max_speed,
    residual_rate,
    sl_update,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AdjointTrace",
    "StructureReport",
    "integrate_adjoint",
    "verify_structure",
    "EikonalPlan",
    "eikonal_plan",
    "oracle_trajectory",
    "oracle_value",
    "DivergenceError",
    "Trajectory",
    "feedback",
    "simulate",
    "simulated_cost_vs_value",
    "GridSpec",
    "ValueField",
    "interpolate",
    "square_grid",
    "zero_field",
    "available_backends",
    "get_backend",
    "MaximizerResult",
    "VertexConditionError",
    "classify_sparsity",
    "maximize_brute_force",
    "maximize_closed_form",
    "ControlProblem",
    "ControlSet",
    "Dynamics",
    "ProblemConfig",
    "RunningCost",
    "eikonal_dynamics",
    "make_problem",
    "nonlinear_test2_dynamics",
    "sample_control_set",
    "SemiLagrangianOperator",
    "SolveReport",
    "SolverConfig",
    "max_speed",
    "residual_rate",
    "sl_update",
    "solve",
]
