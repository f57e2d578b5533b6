"""Optimal vaccination/treatment control for a multi-dose epidemic model."""

from .control import (
    CostWeights,
    OptimalSolution,
    SweepOptions,
    TerminalCost,
    adjoint_rhs,
    control_update,
    fbsm_solve,
    hamiltonian,
    optimize_terminal_time,
    running_cost,
    total_cost,
    transversality_residual,
)
from .errors import (
    BoxViolationError,
    DegenerateParameterError,
    EpictrlError,
    ExplosionGuardError,
    GridMismatchError,
    ParseError,
    RangeError,
    ScheduleError,
    StabilityError,
    UnknownPresetError,
)
from .integrator import (
    AdjointTrajectory,
    AdjointVector,
    TimeGrid,
    integrate_adjoint_backward,
    integrate_forward,
)
from .model import (
    ControlSignal,
    ImpulseEvent,
    ImpulseSchedule,
    ModelParams,
    StateVector,
    Trajectory,
    apply_impulse,
    basic_reproduction_number,
    total_population,
    transmissibility_force,
    vector_field,
)
from .oracle import (
    OracleConfig,
    adjoint_gradient,
    brute_force_optimum,
    finite_difference_gradient,
    piecewise_signal,
)
from .scenarios import (
    PRESET_NAMES,
    RunConfig,
    default_config,
    default_schedule,
    load_config,
    preset,
    save_config,
    validate_config,
)

__all__ = [
    "AdjointTrajectory",
    "AdjointVector",
    "BoxViolationError",
    "ControlSignal",
    "CostWeights",
    "DegenerateParameterError",
    "EpictrlError",
    "ExplosionGuardError",
    "GridMismatchError",
    "ImpulseEvent",
    "ImpulseSchedule",
    "ModelParams",
    "OptimalSolution",
    "OracleConfig",
    "ParseError",
    "PRESET_NAMES",
    "RangeError",
    "RunConfig",
    "ScheduleError",
    "StabilityError",
    "StateVector",
    "SweepOptions",
    "TerminalCost",
    "TimeGrid",
    "Trajectory",
    "UnknownPresetError",
    "adjoint_gradient",
    "adjoint_rhs",
    "apply_impulse",
    "basic_reproduction_number",
    "brute_force_optimum",
    "control_update",
    "default_config",
    "default_schedule",
    "fbsm_solve",
    "finite_difference_gradient",
    "hamiltonian",
    "integrate_adjoint_backward",
    "integrate_forward",
    "load_config",
    "optimize_terminal_time",
    "piecewise_signal",
    "preset",
    "running_cost",
    "save_config",
    "total_cost",
    "total_population",
    "transmissibility_force",
    "transversality_residual",
    "validate_config",
    "vector_field",
]
