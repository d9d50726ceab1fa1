"""Entropy and stability diagnostics for recorded runs.

Entropy: for the Kruzkov family |u - k| the split step must satisfy, for
every constant k,

    (|u^+ - k| - |u - k|) + (dt/dx) (G_j - G_{j-1})
        - sign(ubar_j - k) dt g(x_j, t, ubar_j)  <= 0

with the Crandall-Majda numerical entropy flux
G(a, b; k) = F(max(a,k), max(b,k)) - F(min(a,k), min(b,k)). As a function of
k the residual has constant tails outside a cell's data, kinks at the values
entering its inequality and at critical points of the physical flux, and is
smooth in between with the flux's own shape (linear pieces for a linear
flux, quadratic for a quadratic one). entropy_residual_max probes every
piece at its endpoints, midpoint and fitted parabola vertex, which is
exhaustive for linear and quadratic fluxes; entropy_residual evaluates a
caller-supplied probe set instead.

Stability: the split scheme keeps the sup norm and the total variation
under exponential-in-time envelopes whose rate is
C0 = L / (1 - L * dt_cap) for a source with Lipschitz constant L in u.
On a bounded domain both envelopes are checked in an extended sense that
includes the boundary data (ghost values and their variation in time).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flux import NumericalFluxDescriptor, critical_points, eval_flux
from .source import SourceDescriptor
from .splitting import RunReport, StepRecord


# =============================================================
# Entropy residual
# =============================================================

def numerical_entropy_flux(fluxdesc: NumericalFluxDescriptor, a, b, k):
    """Crandall-Majda entropy flux G(a, b; k) for the Kruzkov entropy |u - k|."""
    upper = eval_flux(fluxdesc, np.maximum(a, k), np.maximum(b, k))
    lower = eval_flux(fluxdesc, np.minimum(a, k), np.minimum(b, k))
    return upper - lower


@dataclass(frozen=True)
class EntropyProbe:
    """A set of entropy constants k to test, with a pass tolerance."""

    k_values: np.ndarray
    tolerance: float

    def __post_init__(self):
        k = np.asarray(self.k_values, dtype=float)
        if k.ndim != 1 or k.size == 0:
            raise ValueError("k_values must be a non-empty 1-d array")
        if not np.all(np.isfinite(k)):
            raise ValueError("k_values must be finite")
        object.__setattr__(self, "k_values", k)
        if self.tolerance <= 0.0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")


def _step_tolerance(rec: StepRecord) -> float:
    scale = max(
        1.0,
        float(np.max(np.abs(rec.field_before.values))),
        float(np.max(np.abs(rec.field_after.values))),
    )
    return 1e-10 * scale


def default_probe(rec: StepRecord, pad: float = 0.1,
                  tolerance: float | None = None) -> EntropyProbe:
    """Probe set from a step: every distinct state value plus padded extremes."""
    pool = np.concatenate([
        rec.field_before.values,
        rec.field_bar.values,
        [rec.ghost_left, rec.ghost_right],
        rec.field_after.values,
    ])
    values = np.unique(pool)
    k = np.concatenate([values, [values[0] - pad, values[-1] + pad]])
    if tolerance is None:
        tolerance = _step_tolerance(rec)
    return EntropyProbe(k_values=np.sort(k), tolerance=tolerance)


@dataclass(frozen=True)
class EntropyCheckResult:
    """Largest entropy residual found in one step."""

    max_residual: float
    tolerance: float
    cell_index: int
    k_value: float
    t_before: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def _signed_distance(bar: np.ndarray, k, tie_sign: float) -> np.ndarray:
    s = np.sign(bar - k)
    if tie_sign != 0.0:
        s = np.where(bar == k, tie_sign, s)
    return s


def _residual_for_k(rec: StepRecord, fluxdesc: NumericalFluxDescriptor,
                    src: SourceDescriptor, k, tie_sign: float,
                    source_values: np.ndarray) -> np.ndarray:
    """Residual in every cell for one k (scalar or per-cell array)."""
    before = rec.field_before.values
    bar = rec.field_bar.values
    after = rec.field_after.values
    dtdx = rec.dt / rec.field_before.grid.dx
    ext = np.concatenate([[rec.ghost_left], bar, [rec.ghost_right]])
    g_right = numerical_entropy_flux(fluxdesc, ext[1:-1], ext[2:], k)
    g_left = numerical_entropy_flux(fluxdesc, ext[:-2], ext[1:-1], k)
    s = _signed_distance(bar, k, tie_sign)
    return (np.abs(after - k) - np.abs(before - k)
            + dtdx * (g_right - g_left)
            - s * rec.dt * source_values)


def _source_values(rec: StepRecord, src: SourceDescriptor) -> np.ndarray:
    x = rec.field_before.grid.cell_centers
    return np.asarray(
        src.eval(x, rec.t_before, rec.field_bar.values), dtype=float
    )


def entropy_residual(rec: StepRecord, fluxdesc: NumericalFluxDescriptor,
                     src: SourceDescriptor, probe: EntropyProbe,
                     tie_sign: float = 0.0) -> EntropyCheckResult:
    """Largest residual over the probe's k set and all cells of one step.

    tie_sign selects the convention for sign(0): 0 by default, or +1/-1 to
    check that the inequality does not hinge on how ties are signed.
    """
    gsrc = _source_values(rec, src)
    worst = -np.inf
    worst_cell = 0
    worst_k = float(probe.k_values[0])
    for k in probe.k_values:
        r = _residual_for_k(rec, fluxdesc, src, float(k), tie_sign, gsrc)
        j = int(np.argmax(r))
        if r[j] > worst:
            worst = float(r[j])
            worst_cell = j
            worst_k = float(k)
    return EntropyCheckResult(
        max_residual=worst,
        tolerance=probe.tolerance,
        cell_index=worst_cell,
        k_value=worst_k,
        t_before=rec.t_before,
    )


def entropy_residual_max(rec: StepRecord, fluxdesc: NumericalFluxDescriptor,
                         src: SourceDescriptor, tie_sign: float = 0.0,
                         tolerance: float | None = None) -> EntropyCheckResult:
    """Per-cell supremum of the residual over every entropy constant k.

    Cell j's residual is piecewise smooth in k. Its kinks sit at the five
    values entering the inequality (u_j, u_j^+, ubar_{j-1}, ubar_j,
    ubar_{j+1}) and at critical points of the physical flux; outside all of
    them it is constant; between them it inherits the flux's shape. Each
    piece is evaluated at its endpoints and midpoint, plus the vertex of
    the parabola through those three points when it arches above them.
    For linear and quadratic fluxes every piece is itself linear or
    quadratic, so this search is exhaustive; for other smooth fluxes it is
    a per-piece refinement of the endpoint probe.
    """
    if tolerance is None:
        tolerance = _step_tolerance(rec)
    gsrc = _source_values(rec, src)
    bar = rec.field_bar.values
    n = bar.size
    ext = np.concatenate([[rec.ghost_left], bar, [rec.ghost_right]])
    local = np.stack([
        rec.field_before.values,
        rec.field_after.values,
        ext[:-2],
        bar,
        ext[2:],
    ])
    lo = local.min(axis=0)
    hi = local.max(axis=0)
    rows = [local, lo[None, :] - 1.0, hi[None, :] + 1.0]
    for c in critical_points(fluxdesc.physical, float(lo.min()), float(hi.max())):
        rows.append(np.full((1, n), c))
    k_rows = np.sort(np.vstack(rows), axis=0)

    def residual(row):
        return _residual_for_k(rec, fluxdesc, src, row, tie_sign, gsrc)

    best_r = np.full(n, -np.inf)
    best_k = np.empty(n)

    def consider(row, values):
        nonlocal best_r, best_k
        better = values > best_r
        best_r = np.where(better, values, best_r)
        best_k = np.where(better, row, best_k)

    r_rows = [residual(row) for row in k_rows]
    for row, values in zip(k_rows, r_rows):
        consider(row, values)
    for i in range(len(k_rows) - 1):
        k1, k2 = k_rows[i], k_rows[i + 1]
        r1, r2 = r_rows[i], r_rows[i + 1]
        half = 0.5 * (k2 - k1)
        live = half > 1e-13 * np.maximum(1.0, np.abs(k1) + np.abs(k2))
        if not np.any(live):
            continue
        km = k1 + half
        rm = residual(km)
        consider(km, rm)
        # Parabola through (k1, r1), (km, rm), (k2, r2): an interior
        # maximum exists only where the middle sample arches upward.
        arch = r1 - 2.0 * rm + r2
        shift = np.zeros(n)
        probe = live & (arch < 0.0)
        np.divide(-half * (r2 - r1), 2.0 * arch, out=shift, where=probe)
        kv = km + np.clip(shift, -half, half)
        consider(kv, residual(kv))

    worst_cell = int(np.argmax(best_r))
    return EntropyCheckResult(
        max_residual=float(best_r[worst_cell]),
        tolerance=tolerance,
        cell_index=worst_cell,
        k_value=float(best_k[worst_cell]),
        t_before=rec.t_before,
    )


class EntropyObserver:
    """Per-step entropy check to attach to a run's observer list.

    method 'exact' evaluates the exact per-cell supremum over k; 'probe'
    uses the default probe set built from each step's states. The flux and
    source are taken from each step's record, so runs whose transport flux
    changes between steps are handled.
    """

    def __init__(self, method: str = "exact", tie_sign: float = 0.0):
        if method not in ("exact", "probe"):
            raise ValueError(f"method must be 'exact' or 'probe', got {method!r}")
        self.method = method
        self.tie_sign = tie_sign
        self.results: list[EntropyCheckResult] = []

    def __call__(self, rec: StepRecord) -> None:
        if self.method == "exact":
            res = entropy_residual_max(
                rec, rec.fluxdesc, rec.src, tie_sign=self.tie_sign
            )
        else:
            probe = default_probe(rec)
            res = entropy_residual(
                rec, rec.fluxdesc, rec.src, probe, tie_sign=self.tie_sign
            )
        self.results.append(res)

    @property
    def worst(self) -> EntropyCheckResult:
        if not self.results:
            raise ValueError("no steps observed")
        return max(self.results, key=lambda r: r.max_residual - r.tolerance)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


# =============================================================
# Stability envelopes
# =============================================================

@dataclass(frozen=True)
class BoundCheckConfig:
    """Inputs to the growth envelopes.

    growth_const is the source's Lipschitz constant in u, dt_cap the
    largest step the run was allowed to take (the envelope rate is
    C0 = growth_const / (1 - growth_const * dt_cap)), and source_tv_l1 a
    bound on the time integral of the source's spatial-variation bound,
    which enters the total-variation envelope only.
    """

    growth_const: float
    dt_cap: float
    source_tv_l1: float = 0.0

    def __post_init__(self):
        if self.growth_const < 0.0:
            raise ValueError(f"growth_const must be >= 0, got {self.growth_const}")
        if self.dt_cap <= 0.0:
            raise ValueError(f"dt_cap must be > 0, got {self.dt_cap}")
        if self.growth_const * self.dt_cap >= 1.0:
            raise ValueError(
                "growth_const * dt_cap must be < 1 for the implicit stage "
                f"to be a contraction, got {self.growth_const * self.dt_cap}"
            )
        if self.source_tv_l1 < 0.0:
            raise ValueError(f"source_tv_l1 must be >= 0, got {self.source_tv_l1}")

    @property
    def envelope_rate(self) -> float:
        return self.growth_const / (1.0 - self.growth_const * self.dt_cap)


@dataclass(frozen=True)
class BoundCheckResult:
    """Observed series against its envelope; margins are bound - observed."""

    name: str
    extended: bool
    reference: float
    bounds: np.ndarray
    observed: np.ndarray
    margins: np.ndarray
    worst_margin: float
    worst_time: float

    @property
    def passed(self) -> bool:
        scale = max(1.0, abs(self.reference))
        return self.worst_margin >= -1e-8 * scale


def _finish_bound(name: str, extended: bool, reference: float,
                  times: np.ndarray, bounds: np.ndarray,
                  observed: np.ndarray) -> BoundCheckResult:
    margins = bounds - observed
    worst = int(np.argmin(margins))
    return BoundCheckResult(
        name=name,
        extended=extended,
        reference=reference,
        bounds=bounds,
        observed=observed,
        margins=margins,
        worst_margin=float(margins[worst]),
        worst_time=float(times[worst]),
    )


def check_linf_bound(report: RunReport, cfg: BoundCheckConfig) -> BoundCheckResult:
    """Sup-norm series against exp(C0 (t - t0)) * max(|u0|_inf, sup |ghosts|).

    On a bounded domain the boundary data can raise the sup norm, so the
    reference extends the initial norm by the largest ghost magnitude seen
    during the run (result flagged extended=True when steps were taken).
    """
    times = np.asarray(report.times)
    observed = np.asarray(report.linf)
    ghost_sup = 0.0
    if report.n_steps > 0:
        ghost_sup = max(
            float(np.max(np.abs(report.ghost_left))),
            float(np.max(np.abs(report.ghost_right))),
        )
    reference = max(observed[0], ghost_sup)
    c0 = cfg.envelope_rate
    bounds = np.exp(c0 * (times - times[0])) * reference
    return _finish_bound(
        "linf", report.n_steps > 0, reference, times, bounds, observed
    )


def check_tv_bound(report: RunReport, cfg: BoundCheckConfig) -> BoundCheckResult:
    """Interior-variation series against the boundary-extended envelope.

    The state at step n is compared with

        exp(C0 (t_n - t0)) * (TV0_ext + GTV_n + source_tv_l1)

    where TV0_ext is the initial variation extended by the jumps to the
    first step's ghost values and GTV_n the accumulated temporal variation
    of the ghost data up to step n. The observed series is the variation of
    the interior cells (first and last cell excluded), where the transport
    stencil never involves more than those same boundary data.
    """
    times = np.asarray(report.times)
    observed = np.asarray(report.tv_interior)
    gl = np.asarray(report.ghost_left)
    gr = np.asarray(report.ghost_right)
    tv0 = report.tv[0]
    if report.n_steps > 0:
        tv0_ext = (abs(report.first_cell[0] - gl[0]) + tv0
                   + abs(report.last_cell[0] - gr[0]))
        gtv = np.zeros(len(times))
        gtv[2:] = np.cumsum(np.abs(np.diff(gl)) + np.abs(np.diff(gr)))
        gtv[1] = 0.0
    else:
        tv0_ext = tv0
        gtv = np.zeros(len(times))
    c0 = cfg.envelope_rate
    bounds = np.exp(c0 * (times - times[0])) * (tv0_ext + gtv + cfg.source_tv_l1)
    return _finish_bound(
        "tv", report.n_steps > 0, float(tv0_ext), times, bounds, observed
    )


# =============================================================
# Temporal variation report
# =============================================================

@dataclass(frozen=True)
class TimeBVReport:
    """Accumulated |u^{n+1}_j - u^n_j| per cell over a snapshotted run."""

    per_cell: np.ndarray
    total_max: float
    n_steps: int


def time_bv_report(report: RunReport) -> TimeBVReport:
    """Per-cell temporal variation sums; requires a run kept with snapshots.

    Reported for inspection only: the scheme does not certify a specific
    constant for this quantity.
    """
    if report.snapshots is None:
        raise ValueError("time_bv_report needs a run with keep_snapshots=True")
    snaps = np.asarray(report.snapshots)
    per_cell = np.sum(np.abs(np.diff(snaps, axis=0)), axis=0)
    return TimeBVReport(
        per_cell=per_cell,
        total_max=float(per_cell.max()) if per_cell.size else 0.0,
        n_steps=len(report.snapshots) - 1,
    )
