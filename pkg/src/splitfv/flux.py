"""Physical fluxes and two-point monotone numerical fluxes.

A numerical flux F(a, b) approximates the physical flux f at an interface
with left state a and right state b. Every flux here is intended to satisfy
the three classical axioms:

  (i)   locally Lipschitz in both arguments,
  (ii)  consistent: F(s, s) = f(s),
  (iii) monotone: nondecreasing in a, nonincreasing in b.

Supported kinds:

  upwind-linear   F(a, b) = f(a), valid for linear f(u) = c*u with c >= 0
  lax-friedrichs  F(a, b) = (f(a) + f(b))/2 - (alpha/2)(b - a)
  godunov         min over [a, b] of f if a <= b, else max over [b, a]
  engquist-osher  f(0) + int_0^a max(f', 0) + int_0^b min(f', 0)

The viscosity alpha of lax-friedrichs must reach sup|f'| over the working
range for monotonicity; smaller values are accepted by the constructor so
that the monotonicity checker has something to fail on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .mesh import CellField

FLUX_KINDS = ("upwind-linear", "lax-friedrichs", "godunov", "engquist-osher")


# =============================================================
# Physical flux
# =============================================================

@dataclass(frozen=True)
class PhysicalFlux:
    """Scalar flux function f with optional derivative and Lipschitz bound.

    Args:
        func: f(u), vectorized over numpy arrays.
        deriv: f'(u) if known; a central finite difference is used otherwise.
        lipschitz_on: callable (lo, hi) -> sup of |f'| over [lo, hi]; when
            absent the bound is estimated by dense sampling of the slope.
    """

    func: Callable
    deriv: Callable | None = None
    lipschitz_on: Callable | None = None

    def eval(self, u):
        out = self.func(np.asarray(u, dtype=float))
        if np.isscalar(u) or np.ndim(u) == 0:
            return float(out)
        return np.asarray(out, dtype=float)

    def slope(self, u):
        if self.deriv is not None:
            out = self.deriv(np.asarray(u, dtype=float))
            if np.isscalar(u) or np.ndim(u) == 0:
                return float(out)
            return np.asarray(out, dtype=float)
        uu = np.asarray(u, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(uu))
        out = (self.func(uu + h) - self.func(uu - h)) / (2.0 * h)
        if np.isscalar(u) or np.ndim(u) == 0:
            return float(out)
        return out

    def bound(self, lo: float, hi: float) -> float:
        """Sup of |f'| over [lo, hi] (exact if lipschitz_on given, sampled otherwise)."""
        if hi < lo:
            lo, hi = hi, lo
        if self.lipschitz_on is not None:
            return float(self.lipschitz_on(lo, hi))
        s = np.linspace(lo, hi, 513) if hi > lo else np.array([lo])
        return float(np.max(np.abs(self.slope(s))))


def linear_flux(speed: float) -> PhysicalFlux:
    """f(u) = speed * u."""
    c = float(speed)
    return PhysicalFlux(
        func=lambda u: c * u,
        deriv=lambda u: c * np.ones_like(np.asarray(u, dtype=float)),
        lipschitz_on=lambda lo, hi: abs(c),
    )


def burgers_flux() -> PhysicalFlux:
    """f(u) = u^2 / 2."""
    return PhysicalFlux(
        func=lambda u: 0.5 * u * u,
        deriv=lambda u: np.asarray(u, dtype=float),
        lipschitz_on=lambda lo, hi: max(abs(lo), abs(hi)),
    )


def zero_flux() -> PhysicalFlux:
    """f identically zero (pure source problems)."""
    return PhysicalFlux(
        func=lambda u: 0.0 * np.asarray(u, dtype=float),
        deriv=lambda u: 0.0 * np.asarray(u, dtype=float),
        lipschitz_on=lambda lo, hi: 0.0,
    )


# =============================================================
# Numerical flux descriptors
# =============================================================

@dataclass(frozen=True)
class NumericalFluxDescriptor:
    """A numerical flux kind bound to a physical flux."""

    kind: str
    physical: PhysicalFlux
    viscosity: float = 0.0

    def __post_init__(self):
        if self.kind not in FLUX_KINDS:
            raise ValueError(f"unknown flux kind {self.kind!r}, expected one of {FLUX_KINDS}")
        if not np.isfinite(self.viscosity) or self.viscosity < 0:
            raise ValueError(f"viscosity must be >= 0, got {self.viscosity}")


def upwind_linear(physical: PhysicalFlux) -> NumericalFluxDescriptor:
    """Upwind flux F(a, b) = f(a); requires linear f with nonnegative speed."""
    f0 = physical.eval(0.0)
    c = physical.eval(1.0) - f0
    scale = max(1.0, abs(c))
    if abs(f0) > 1e-12 * scale or abs(physical.eval(2.0) - 2.0 * c - f0) > 1e-12 * scale:
        raise ValueError("upwind-linear requires a linear flux f(u) = c*u")
    if c < 0:
        raise ValueError(f"upwind-linear requires speed >= 0, got {c}")
    return NumericalFluxDescriptor("upwind-linear", physical)


def lax_friedrichs(physical: PhysicalFlux, viscosity: float) -> NumericalFluxDescriptor:
    return NumericalFluxDescriptor("lax-friedrichs", physical, float(viscosity))


def godunov(physical: PhysicalFlux) -> NumericalFluxDescriptor:
    return NumericalFluxDescriptor("godunov", physical)


def engquist_osher(physical: PhysicalFlux) -> NumericalFluxDescriptor:
    return NumericalFluxDescriptor("engquist-osher", physical)


# =============================================================
# Evaluation
# =============================================================

def critical_points(phys: PhysicalFlux, lo: float, hi: float) -> list[float]:
    """Zeros of f' in (lo, hi), located by bisection on a 64-point pre-scan."""
    if not hi > lo:
        return []
    s = np.linspace(lo, hi, 64)
    d = phys.slope(s)
    crits = [float(s[i]) for i in range(1, 63) if d[i] == 0.0]
    for i in range(63):
        if d[i] * d[i + 1] < 0.0:
            a, b = float(s[i]), float(s[i + 1])
            da = float(d[i])
            for _ in range(80):
                m = 0.5 * (a + b)
                dm = float(phys.slope(m))
                if dm == 0.0:
                    a = b = m
                    break
                if da * dm < 0.0:
                    b = m
                else:
                    a, da = m, dm
            crits.append(0.5 * (a + b))
    return sorted(crits)


def _godunov_eval(phys: PhysicalFlux, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    fa = phys.eval(a)
    fb = phys.eval(b)
    fmin = np.minimum(fa, fb)
    fmax = np.maximum(fa, fb)
    for c in critical_points(phys, float(lo.min()), float(hi.max())):
        inside = (lo < c) & (c < hi)
        if np.any(inside):
            fc = phys.eval(c)
            fmin = np.where(inside, np.minimum(fmin, fc), fmin)
            fmax = np.where(inside, np.maximum(fmax, fc), fmax)
    return np.where(a <= b, fmin, fmax)


def _eo_halves_scalar(phys: PhysicalFlux, a: float, b: float) -> float:
    f0 = phys.eval(0.0)

    def oriented(limit: float, part) -> float:
        if limit == 0.0:
            return 0.0
        lo, hi = min(0.0, limit), max(0.0, limit)
        pts = [c for c in critical_points(phys, lo, hi) if lo < c < hi] or None
        val, _ = quad(
            part, 0.0, limit, points=pts, limit=200, epsabs=1e-14, epsrel=1e-12,
            full_output=0,
        )
        return val

    pos = oriented(a, lambda s: max(phys.slope(s), 0.0))
    neg = oriented(b, lambda s: min(phys.slope(s), 0.0))
    return f0 + pos + neg


def eval_flux(desc: NumericalFluxDescriptor, a, b):
    """Evaluate the numerical flux at interface states (a, b).

    Accepts scalars or equally shaped numpy arrays; returns the same shape.
    """
    scalar = (np.isscalar(a) or np.ndim(a) == 0) and (np.isscalar(b) or np.ndim(b) == 0)
    aa = np.atleast_1d(np.asarray(a, dtype=float))
    bb = np.atleast_1d(np.asarray(b, dtype=float))
    aa, bb = np.broadcast_arrays(aa, bb)
    if not (np.all(np.isfinite(aa)) and np.all(np.isfinite(bb))):
        raise ValueError("non-finite interface state passed to eval_flux")
    phys = desc.physical
    if desc.kind == "upwind-linear":
        out = phys.eval(aa)
    elif desc.kind == "lax-friedrichs":
        out = 0.5 * (phys.eval(aa) + phys.eval(bb)) - 0.5 * desc.viscosity * (bb - aa)
    elif desc.kind == "godunov":
        out = _godunov_eval(phys, aa, bb)
    else:
        flat = [
            _eo_halves_scalar(phys, float(x), float(y))
            for x, y in zip(aa.ravel(), bb.ravel())
        ]
        out = np.array(flat).reshape(aa.shape)
    out = np.asarray(out, dtype=float)
    if scalar:
        return float(out.reshape(())[()])
    return out


# =============================================================
# Monotonicity check and CFL bound
# =============================================================

@dataclass(frozen=True)
class FluxMonotonicityReport:
    """Worst forward differences of F over a sample lattice.

    worst_drop_in_a is the most negative forward difference along the first
    argument (should be >= -1e-14 for a monotone flux); worst_rise_in_b is
    the most positive forward difference along the second argument (should
    be <= 1e-14).
    """

    kind: str
    bounds: tuple[float, float]
    samples: int
    worst_drop_in_a: float
    worst_rise_in_b: float

    @property
    def passed(self) -> bool:
        return self.worst_drop_in_a >= -1e-14 and self.worst_rise_in_b <= 1e-14


def check_monotone(
    desc: NumericalFluxDescriptor, bounds: tuple[float, float], samples: int = 50
) -> FluxMonotonicityReport:
    """Sample F on a lattice over bounds x bounds and report monotonicity."""
    lo, hi = float(bounds[0]), float(bounds[1])
    if not hi > lo:
        raise ValueError(f"empty sample range ({lo}, {hi})")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    s = np.linspace(lo, hi, int(samples))
    A, B = np.meshgrid(s, s, indexing="ij")
    F = eval_flux(desc, A, B)
    diff_a = np.diff(F, axis=0)
    diff_b = np.diff(F, axis=1)
    return FluxMonotonicityReport(
        kind=desc.kind,
        bounds=(lo, hi),
        samples=int(samples),
        worst_drop_in_a=float(diff_a.min()),
        worst_rise_in_b=float(diff_b.max()),
    )


def flux_lipschitz(desc: NumericalFluxDescriptor, lo: float, hi: float) -> float:
    """Lipschitz constant governing the CFL restriction over [lo, hi].

    For upwind-linear, godunov and engquist-osher this is sup|f'|; for
    lax-friedrichs the viscosity also enters: max(sup|f'|, alpha).
    """
    base = desc.physical.bound(lo, hi)
    if desc.kind == "lax-friedrichs":
        return max(base, desc.viscosity)
    return base


def max_dt(
    desc: NumericalFluxDescriptor,
    field: CellField,
    cfl_number: float,
    dt_cap: float = np.inf,
) -> float:
    """Largest stable step for the explicit transport update on this field.

    Returns cfl_number * dx / L where L = flux_lipschitz over the current
    field range; degenerate fluxes (L = 0) return the caller's dt_cap.
    """
    if not (0.0 < cfl_number <= 1.0):
        raise ValueError(f"cfl_number must be in (0, 1], got {cfl_number}")
    lo = float(field.values.min())
    hi = float(field.values.max())
    L = flux_lipschitz(desc, lo, hi)
    if L <= 0.0:
        return dt_cap
    return min(cfl_number * field.grid.dx / L, dt_cap)
