"""Finite-volume simulator and diagnostics for a chemotaxis-consumption
system with logistic growth.

The model couples a cell density u and an attractant v on a box with
zero-flux boundaries:

    u_t = div(D(u) grad u) - chi div(u grad v) + mu (u - u^2)
    v_t = lap(v) - u v,         D(u) = c_d (u + 1)^(m - 1)

`chemofv.model.threshold_m` gives the critical diffusion exponent separating
bounded from potentially unbounded densities; the harness maps that boundary
empirically while the diagnostics track the a-priori functionals (mass,
extrema, entropy, Dirichlet energy, dissipation) that the boundedness
argument rests on.
"""

from .diagnostics import (
    DiagConfig,
    DiagSeries,
    Recorder,
    RunOutcome,
    audit_entropy,
    classify_run,
    dissipation,
    entropy,
    functional_snapshot,
    gronwall_bound,
    gronwall_verify,
)
from .grid import Field, FaceField, GridSpec, div_faces, grad_faces, integrate, laplacian_neumann
from .model import (
    ModelParams,
    State,
    diffusivity,
    logistic_balance,
    rhs_u,
    rhs_v,
    threshold_m,
)
from .stepper import (
    LinearSolverError,
    PositivityError,
    SolverConfig,
    StepRejection,
    Trajectory,
    choose_dt,
    run,
    solve_spd,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "GridSpec",
    "Field",
    "FaceField",
    "grad_faces",
    "div_faces",
    "laplacian_neumann",
    "integrate",
    "ModelParams",
    "State",
    "diffusivity",
    "rhs_u",
    "rhs_v",
    "logistic_balance",
    "threshold_m",
    "SolverConfig",
    "Trajectory",
    "StepRejection",
    "LinearSolverError",
    "PositivityError",
    "solve_spd",
    "step",
    "choose_dt",
    "run",
    "DiagConfig",
    "DiagSeries",
    "Recorder",
    "RunOutcome",
    "entropy",
    "dissipation",
    "functional_snapshot",
    "classify_run",
    "gronwall_bound",
    "gronwall_verify",
    "audit_entropy",
]
