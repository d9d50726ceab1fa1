"""Operator-splitting finite-volume solver for scalar balance laws.

The package solves u_t + f(u)_x = g(x, t, u) on an interval with a
monotone explicit flux and an implicit source stage, tracks entropy and
stability diagnostics per step, and ships a manufacturing-line model whose
transport speed depends on the total load.
"""

from __future__ import annotations

from .diagnostics import (
    BoundCheckConfig,
    BoundCheckResult,
    EntropyCheckResult,
    EntropyObserver,
    EntropyProbe,
    TimeBVReport,
    check_linf_bound,
    check_tv_bound,
    default_probe,
    entropy_residual,
    entropy_residual_max,
    numerical_entropy_flux,
    time_bv_report,
)
from .factory import (
    FACTORY_FLUX_KINDS,
    FactoryModel,
    FactoryScenario,
    SteadyYieldState,
    YieldLoss,
    as_source,
    constant_yield_steady_state,
    outflux,
    preset_scenario,
    run_factory,
    steady_density,
    step_influx,
    transport_descriptor,
    velocity,
    wip,
)
from .flux import (
    FLUX_KINDS,
    FluxMonotonicityReport,
    NumericalFluxDescriptor,
    PhysicalFlux,
    burgers_flux,
    check_monotone,
    engquist_osher,
    eval_flux,
    flux_lipschitz,
    godunov,
    lax_friedrichs,
    linear_flux,
    max_dt,
    upwind_linear,
    zero_flux,
)
from .mesh import (
    CellField,
    Grid1D,
    TimeAxis,
    build_grid,
    l1_distance,
    linf_norm,
    project_initial,
    total_variation,
)
from .source import (
    SourceDescriptor,
    SourcePropertyReport,
    SourceSolveError,
    implicit_source_step,
    proportional_decay,
    verify_source_properties,
    zero_source,
)
from .splitting import (
    JAM_VELOCITY_FLOOR,
    BoundarySpec,
    CFLViolationError,
    JammedLineError,
    RunReport,
    StepRecord,
    fill_ghosts,
    make_step_record,
    march,
    run,
    source_stage,
    step,
    transport_stage,
)
from .verify import (
    RefinementLevel,
    RefinementResult,
    TestProblem,
    advection_decay_problem,
    burgers_rarefaction_problem,
    burgers_shock_problem,
    exact_advection_decay,
    rankine_hugoniot_shock,
    refinement_study,
    shock_position,
    solve_on_grid,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheckConfig",
    "BoundCheckResult",
    "BoundarySpec",
    "CFLViolationError",
    "CellField",
    "EntropyCheckResult",
    "EntropyObserver",
    "EntropyProbe",
    "FACTORY_FLUX_KINDS",
    "FLUX_KINDS",
    "FactoryModel",
    "FactoryScenario",
    "FluxMonotonicityReport",
    "Grid1D",
    "JAM_VELOCITY_FLOOR",
    "JammedLineError",
    "NumericalFluxDescriptor",
    "PhysicalFlux",
    "RefinementLevel",
    "RefinementResult",
    "RunReport",
    "SourceDescriptor",
    "SourcePropertyReport",
    "SourceSolveError",
    "StepRecord",
    "SteadyYieldState",
    "TestProblem",
    "TimeAxis",
    "TimeBVReport",
    "YieldLoss",
    "advection_decay_problem",
    "as_source",
    "build_grid",
    "burgers_flux",
    "burgers_rarefaction_problem",
    "burgers_shock_problem",
    "check_linf_bound",
    "check_monotone",
    "check_tv_bound",
    "constant_yield_steady_state",
    "default_probe",
    "engquist_osher",
    "entropy_residual",
    "entropy_residual_max",
    "eval_flux",
    "exact_advection_decay",
    "fill_ghosts",
    "flux_lipschitz",
    "godunov",
    "implicit_source_step",
    "l1_distance",
    "lax_friedrichs",
    "linear_flux",
    "linf_norm",
    "make_step_record",
    "march",
    "max_dt",
    "numerical_entropy_flux",
    "outflux",
    "preset_scenario",
    "project_initial",
    "proportional_decay",
    "rankine_hugoniot_shock",
    "refinement_study",
    "run",
    "run_factory",
    "shock_position",
    "solve_on_grid",
    "source_stage",
    "steady_density",
    "step",
    "step_influx",
    "time_bv_report",
    "total_variation",
    "transport_descriptor",
    "transport_stage",
    "upwind_linear",
    "velocity",
    "verify_source_properties",
    "wip",
    "zero_flux",
    "zero_source",
]
