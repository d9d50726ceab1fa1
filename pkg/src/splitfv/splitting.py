"""Split-step time integration: implicit source stage, explicit transport.

One time step of size dt from t to t + dt does, in order:

  1. source stage:    solve  ubar_j = u_j + dt * g(x_j, t, ubar_j)
  2. ghost filling:   boundary values from the post-source field ubar
  3. transport stage: u_j^+ = ubar_j - (dt/dx) (F(ubar_j, ubar_{j+1})
                                               - F(ubar_{j-1}, ubar_j))

with F a monotone two-point numerical flux. The transport stage refuses to
run when dt exceeds the hard CFL limit dx / L for the Lipschitz constant L
of the flux over the stencil range (ghosts included).

Boundaries: the left boundary is either a Dirichlet trace or an influx
rate; an influx ghost is the rate divided by a caller-supplied transport
velocity. The right boundary is outflow (zero-gradient copy) or Dirichlet.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Iterable, Sequence

import numpy as np

from .flux import NumericalFluxDescriptor, eval_flux, flux_lipschitz, max_dt
from .mesh import CellField, Grid1D, TimeAxis, linf_norm, total_variation
from .source import SourceDescriptor, implicit_source_step

JAM_VELOCITY_FLOOR = 1e-10
_CFL_SLACK = 1e-9


class CFLViolationError(RuntimeError):
    """The requested dt exceeds the hard CFL limit for this stencil."""


class JammedLineError(RuntimeError):
    """Transport velocity collapsed; an influx boundary cannot be filled."""


# =============================================================
# Boundary conditions
# =============================================================

def _as_schedule(value) -> Callable[[float], float]:
    if callable(value):
        return value
    v = float(value)
    return lambda t: v


@dataclass(frozen=True)
class BoundarySpec:
    """Left boundary: 'dirichlet' or 'influx'; right: 'outflow' or 'dirichlet'.

    Schedules are callables of time: a Dirichlet schedule yields the ghost
    density directly, an influx schedule yields the boundary flux rate that
    is converted to a ghost density via the step's transport velocity.
    """

    left_kind: str
    right_kind: str
    left_schedule: Callable[[float], float]
    right_schedule: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.left_kind not in ("dirichlet", "influx"):
            raise ValueError(f"left_kind must be dirichlet or influx, got {self.left_kind!r}")
        if self.right_kind not in ("outflow", "dirichlet"):
            raise ValueError(f"right_kind must be outflow or dirichlet, got {self.right_kind!r}")
        if self.right_kind == "dirichlet" and self.right_schedule is None:
            raise ValueError("right dirichlet boundary needs a schedule")

    @classmethod
    def dirichlet_pair(cls, left, right) -> BoundarySpec:
        return cls("dirichlet", "dirichlet", _as_schedule(left), _as_schedule(right))

    @classmethod
    def dirichlet_outflow(cls, left) -> BoundarySpec:
        return cls("dirichlet", "outflow", _as_schedule(left))

    @classmethod
    def influx_outflow(cls, influx) -> BoundarySpec:
        return cls("influx", "outflow", _as_schedule(influx))


def fill_ghosts(field_bar: CellField, bc: BoundarySpec, t: float,
                velocity_hint: float | None = None) -> tuple[float, float]:
    """Ghost cell values flanking the post-source field at time t."""
    if bc.left_kind == "dirichlet":
        ghost_left = float(bc.left_schedule(t))
    else:
        if velocity_hint is None:
            raise ValueError("influx boundary requires a velocity hint")
        if velocity_hint <= JAM_VELOCITY_FLOOR:
            raise JammedLineError(
                f"transport velocity {velocity_hint} at t={t} is at or below "
                f"the jam floor {JAM_VELOCITY_FLOOR}"
            )
        ghost_left = float(bc.left_schedule(t)) / velocity_hint
    if bc.right_kind == "outflow":
        ghost_right = float(field_bar.values[-1])
    else:
        ghost_right = float(bc.right_schedule(t))
    if not (np.isfinite(ghost_left) and np.isfinite(ghost_right)):
        raise ValueError(f"non-finite ghost value at t={t}")
    return ghost_left, ghost_right


# =============================================================
# Stages and the combined step
# =============================================================

@dataclass(frozen=True)
class StepRecord:
    """Everything one accepted step produced, for observers and diagnostics."""

    t_before: float
    dt: float
    field_before: CellField
    field_bar: CellField
    field_after: CellField
    ghost_left: float
    ghost_right: float
    flux_left: float
    flux_right: float
    exited_working_range: bool
    fluxdesc: NumericalFluxDescriptor
    src: SourceDescriptor


def source_stage(field: CellField, dt: float, src: SourceDescriptor) -> CellField:
    """Backward-Euler source update of every cell; keeps the field's time."""
    bar = implicit_source_step(
        field.values, field.grid.cell_centers, field.time, dt, src
    )
    return field.with_values(bar)


def transport_stage(field_bar: CellField, dt: float,
                    fluxdesc: NumericalFluxDescriptor, bc: BoundarySpec,
                    velocity_hint: float | None = None):
    """Explicit conservative update of the post-source field.

    Returns (field_after, ghost_left, ghost_right, flux_left, flux_right).
    """
    t = field_bar.time
    dx = field_bar.grid.dx
    ghost_left, ghost_right = fill_ghosts(field_bar, bc, t, velocity_hint)
    ext = np.concatenate([[ghost_left], field_bar.values, [ghost_right]])
    L = flux_lipschitz(fluxdesc, float(ext.min()), float(ext.max()))
    if dt * L / dx > 1.0 + _CFL_SLACK:
        raise CFLViolationError(
            f"dt={dt} exceeds the hard CFL limit {dx / L if L > 0 else np.inf} "
            f"(flux Lipschitz constant {L} over the stencil range)"
        )
    F = eval_flux(fluxdesc, ext[:-1], ext[1:])
    new_values = field_bar.values - (dt / dx) * (F[1:] - F[:-1])
    if not np.all(np.isfinite(new_values)):
        raise ArithmeticError(f"transport stage produced non-finite values at t={t}")
    after = CellField(field_bar.grid, new_values, time=t + dt)
    return after, ghost_left, ghost_right, float(F[0]), float(F[-1])


def make_step_record(field_before: CellField, field_bar: CellField,
                     field_after: CellField, ghost_left: float,
                     ghost_right: float, flux_left: float, flux_right: float,
                     dt: float, fluxdesc: NumericalFluxDescriptor,
                     src: SourceDescriptor) -> StepRecord:
    """Assemble a StepRecord, flagging exits from the pre-step working range.

    The working range is the pre-step value range padded by 10% of its
    scale; leaving it does not invalidate the step (the CFL guard already
    ran against the actual stencil), it is reported so drifting runs are
    visible in the diagnostics.
    """
    lo = float(field_before.values.min())
    hi = float(field_before.values.max())
    pad = 0.1 * max(hi - lo, abs(lo), abs(hi))
    stencil_lo = min(float(field_after.values.min()), ghost_left, ghost_right)
    stencil_hi = max(float(field_after.values.max()), ghost_left, ghost_right)
    exited = stencil_lo < lo - pad or stencil_hi > hi + pad
    return StepRecord(
        t_before=field_before.time,
        dt=dt,
        field_before=field_before,
        field_bar=field_bar,
        field_after=field_after,
        ghost_left=ghost_left,
        ghost_right=ghost_right,
        flux_left=flux_left,
        flux_right=flux_right,
        exited_working_range=exited,
        fluxdesc=fluxdesc,
        src=src,
    )


def step(field: CellField, dt: float, fluxdesc: NumericalFluxDescriptor,
         src: SourceDescriptor, bc: BoundarySpec,
         velocity_hint: float | None = None) -> StepRecord:
    """One full split step; refuses to run outside its stability conditions."""
    if not np.isfinite(dt) or dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    bar = source_stage(field, dt, src)
    after, ghost_left, ghost_right, flux_left, flux_right = transport_stage(
        bar, dt, fluxdesc, bc, velocity_hint
    )
    return make_step_record(
        field, bar, after, ghost_left, ghost_right, flux_left, flux_right,
        dt, fluxdesc, src,
    )


# =============================================================
# Run driver and report
# =============================================================

def _interior_tv(values: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(values[1:-1]))))


@dataclass
class RunReport:
    """Per-step diagnostic record of a run.

    Scalar series are aligned with `times` (one entry per accepted state,
    initial state included); ghost and flux series have one entry per step.
    `channels` holds model-specific observables added by the driver, each
    aligned with `times`.
    """

    grid: Grid1D
    times: list = dataclass_field(default_factory=list)
    dts: list = dataclass_field(default_factory=list)
    linf: list = dataclass_field(default_factory=list)
    tv: list = dataclass_field(default_factory=list)
    tv_interior: list = dataclass_field(default_factory=list)
    first_cell: list = dataclass_field(default_factory=list)
    last_cell: list = dataclass_field(default_factory=list)
    ghost_left: list = dataclass_field(default_factory=list)
    ghost_right: list = dataclass_field(default_factory=list)
    flux_left: list = dataclass_field(default_factory=list)
    flux_right: list = dataclass_field(default_factory=list)
    range_exits: int = 0
    channels: dict = dataclass_field(default_factory=dict)
    snapshots: list | None = None
    checkpoints: dict = dataclass_field(default_factory=dict)
    final_field: CellField | None = None

    @classmethod
    def start(cls, initial: CellField, keep_snapshots: bool = False) -> RunReport:
        report = cls(grid=initial.grid)
        report._append_state(initial)
        if keep_snapshots:
            report.snapshots = [initial.values]
        report.final_field = initial
        return report

    def _append_state(self, field: CellField) -> None:
        self.times.append(field.time)
        self.linf.append(linf_norm(field))
        self.tv.append(total_variation(field))
        self.tv_interior.append(_interior_tv(field.values))
        self.first_cell.append(float(field.values[0]))
        self.last_cell.append(float(field.values[-1]))

    def record_step(self, rec: StepRecord) -> None:
        self._append_state(rec.field_after)
        self.dts.append(rec.dt)
        self.ghost_left.append(rec.ghost_left)
        self.ghost_right.append(rec.ghost_right)
        self.flux_left.append(rec.flux_left)
        self.flux_right.append(rec.flux_right)
        if rec.exited_working_range:
            self.range_exits += 1
        if self.snapshots is not None:
            self.snapshots.append(rec.field_after.values)
        self.final_field = rec.field_after

    @property
    def n_steps(self) -> int:
        return len(self.dts)


def march(initial: CellField, t_final: float,
          pick_dt: Callable[[CellField], float],
          advance: Callable[[CellField, float], StepRecord],
          observers: Iterable[Callable[[StepRecord], None]] = (),
          checkpoint_times: Sequence[float] = (),
          keep_snapshots: bool = False,
          on_start: Callable[[CellField, RunReport], None] | None = None,
          on_step: Callable[[StepRecord, RunReport], None] | None = None) -> RunReport:
    """Generic adaptive time loop shared by the plain and model-bound drivers.

    pick_dt proposes a stable step for the current field; advance performs
    it. Steps are clipped so the run lands exactly on each checkpoint time
    and on t_final; the values at those times go to report.checkpoints.
    """
    if t_final < initial.time:
        raise ValueError(f"t_final={t_final} precedes the initial time {initial.time}")
    observers = tuple(observers)
    report = RunReport.start(initial, keep_snapshots=keep_snapshots)
    if on_start is not None:
        on_start(initial, report)
    tiny = 1e-12 * max(1.0, abs(t_final))
    targets = sorted({float(c) for c in checkpoint_times})
    for target in targets:
        if abs(target - initial.time) <= tiny:
            report.checkpoints[target] = initial.values

    field = initial
    t = initial.time
    while t < t_final - tiny:
        dt = pick_dt(field)
        if not np.isfinite(dt) or dt <= 0.0:
            raise RuntimeError(f"dt proposal {dt} at t={t} is not usable")
        t_next = min(t + dt, t_final)
        for target in targets:
            if t + tiny < target < t_next - tiny:
                t_next = target
                break
        if t_final - t_next < tiny:
            t_next = t_final
        if t_next - t < 1e-14 * max(1.0, abs(t_final)):
            raise RuntimeError(f"step size collapsed at t={t}")
        rec = advance(field, t_next - t)
        report.record_step(rec)
        if on_step is not None:
            on_step(rec, report)
        for observer in observers:
            observer(rec)
        field = rec.field_after
        t = t_next
        for target in targets:
            if abs(target - t) <= tiny:
                report.checkpoints[target] = field.values
    return report


def run(initial: CellField, t_final: float, fluxdesc: NumericalFluxDescriptor,
        src: SourceDescriptor, bc: BoundarySpec, time_axis: TimeAxis,
        observers: Iterable[Callable[[StepRecord], None]] = (),
        checkpoint_times: Sequence[float] = (),
        keep_snapshots: bool = False,
        velocity_hint: float | None = None) -> RunReport:
    """March a fixed-flux problem from the initial field to t_final."""

    def pick_dt(field: CellField) -> float:
        return max_dt(fluxdesc, field, time_axis.cfl_number, time_axis.dt_max)

    def advance(field: CellField, dt: float) -> StepRecord:
        return step(field, dt, fluxdesc, src, bc, velocity_hint)

    return march(
        initial, t_final, pick_dt, advance,
        observers=observers,
        checkpoint_times=checkpoint_times,
        keep_snapshots=keep_snapshots,
    )
