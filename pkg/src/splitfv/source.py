"""Source terms g(x, t, u) and the implicit sub-step of the splitting.

The splitting treats the source by one backward-Euler step per time step:
solve w = u + dt * g(x, t, w) for w. Under the contraction condition
lipschitz_u * dt < 1 the map w -> u + dt*g(x, t, w) is a contraction, so
plain fixed-point iteration converges geometrically; a bracketed scalar
root solve serves as a fallback for descriptors near the contraction limit.

A SourceDescriptor bundles g with the constants the solver and the
diagnostics rely on:

  lipschitz_u   L with |g(x,t,u1) - g(x,t,u2)| <= L|u1 - u2|
  sup_at_zero   bound on sup over (x,t) of |g(x, t, 0)|
  tv_bound      B(t) bounding the spatial total variation of g(., t, u)
  growth_const  L_g with |g(x,t,u)| <= L_g (1 + |u|); defaults to
                max(lipschitz_u, sup_at_zero)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq


class SourceSolveError(RuntimeError):
    """The implicit source step failed; the descriptor's declared constants
    are likely inconsistent with the actual source function."""


@dataclass(frozen=True)
class SourceDescriptor:
    """Source function g(x, t, u) with its declared analytic constants."""

    func: Callable
    lipschitz_u: float
    sup_at_zero: float
    tv_bound: Callable
    growth_const: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.lipschitz_u) or self.lipschitz_u < 0:
            raise ValueError(f"lipschitz_u must be >= 0, got {self.lipschitz_u}")
        if not np.isfinite(self.sup_at_zero) or self.sup_at_zero < 0:
            raise ValueError(f"sup_at_zero must be >= 0, got {self.sup_at_zero}")
        if self.growth_const is None:
            object.__setattr__(self, "growth_const", growth_constant_estimate(self))
        elif not np.isfinite(self.growth_const) or self.growth_const < 0:
            raise ValueError(f"growth_const must be >= 0, got {self.growth_const}")

    def eval(self, x, t, u):
        return self.func(x, t, u)


def growth_constant_estimate(src: SourceDescriptor) -> float:
    """L_g = max(L, sup|g(.,.,0)|), so that |g| <= L_g (1 + |u|)."""
    return max(src.lipschitz_u, src.sup_at_zero)


def zero_source() -> SourceDescriptor:
    return SourceDescriptor(
        func=lambda x, t, u: 0.0 * np.asarray(u, dtype=float),
        lipschitz_u=0.0,
        sup_at_zero=0.0,
        tv_bound=lambda t: 0.0,
    )


def proportional_decay(rate: float) -> SourceDescriptor:
    """g(x, t, u) = -rate * u with rate >= 0."""
    r = float(rate)
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    return SourceDescriptor(
        func=lambda x, t, u: -r * np.asarray(u, dtype=float),
        lipschitz_u=r,
        sup_at_zero=0.0,
        tv_bound=lambda t: 0.0,
    )


# =============================================================
# Implicit sub-step
# =============================================================

def _bracketed_rescue(src: SourceDescriptor, u0: float, x: float, t: float,
                      dt: float, tol: float) -> float:
    def residual(w: float) -> float:
        return w - u0 - dt * float(src.eval(x, t, w))

    radius = dt * abs(float(src.eval(x, t, u0))) / (1.0 - src.lipschitz_u * dt)
    radius = radius * (1.0 + 1e-9) + 1e-12
    lo, hi = u0 - radius, u0 + radius
    for _ in range(6):
        if residual(lo) <= 0.0 <= residual(hi):
            break
        lo, hi = u0 - 2.0 * (u0 - lo), u0 + 2.0 * (hi - u0)
    else:
        raise SourceSolveError(
            "no sign change bracketing the implicit source update; the "
            "declared lipschitz_u does not bound the actual source slope"
        )
    root = brentq(residual, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    if abs(residual(root)) > tol:
        raise SourceSolveError("implicit source update did not reach tolerance")
    return float(root)


def implicit_source_step(u, x, t: float, dt: float, src: SourceDescriptor,
                         tol: float = 1e-12, max_iters: int = 100):
    """Solve w = u + dt * g(x, t, w) cell-wise.

    Accepts scalar (u, x) or equally shaped arrays. The returned value w
    satisfies |w - u - dt g(x, t, w)| <= tol. Raises ValueError when the
    contraction condition lipschitz_u * dt < 1 fails and SourceSolveError
    when the solve cannot be completed at all.
    """
    if not np.isfinite(dt) or dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if src.lipschitz_u * dt >= 1.0:
        raise ValueError(
            f"contraction condition violated: lipschitz_u * dt = "
            f"{src.lipschitz_u * dt} >= 1"
        )
    scalar = np.isscalar(u) or np.ndim(u) == 0
    u0 = np.atleast_1d(np.asarray(u, dtype=float)).astype(float)
    xx = np.broadcast_to(np.asarray(x, dtype=float), u0.shape)
    if not np.all(np.isfinite(u0)):
        raise ValueError("non-finite state passed to implicit_source_step")

    w = u0.copy()
    converged = False
    with np.errstate(all="ignore"):
        for _ in range(max_iters):
            w_next = u0 + dt * np.asarray(src.eval(xx, t, w), dtype=float)
            if not np.all(np.isfinite(w_next)):
                w = w_next
                break
            if np.max(np.abs(w_next - w)) <= tol:
                # |w - u0 - dt g(w)| = |w_next - w| <= tol, so w is the answer.
                converged = True
                break
            w = w_next
    if not converged:
        with np.errstate(all="ignore"):
            resid = np.abs(u0 + dt * np.asarray(src.eval(xx, t, w), dtype=float) - w)
        bad = ~np.isfinite(resid) | (resid > tol)
        for i in np.flatnonzero(bad):
            w[i] = _bracketed_rescue(src, float(u0[i]), float(xx[i]), t, dt, tol)
    if not np.all(np.isfinite(w)):
        raise SourceSolveError("implicit source update produced non-finite values")
    return float(w[0]) if scalar else w


# =============================================================
# Property verification
# =============================================================

@dataclass(frozen=True)
class SourcePropertyReport:
    """Observed margins for the three declared source properties.

    Margins are (declared bound) - (worst observed value); a negative
    margin beyond rounding noise means the declaration is wrong.
    """

    lipschitz_declared: float
    lipschitz_observed: float
    tv_margin: float
    growth_margin: float

    @property
    def lipschitz_margin(self) -> float:
        return self.lipschitz_declared - self.lipschitz_observed

    @property
    def lipschitz_ok(self) -> bool:
        return self.lipschitz_margin >= -1e-12 * max(1.0, self.lipschitz_declared)

    @property
    def tv_ok(self) -> bool:
        return self.tv_margin >= -1e-12

    @property
    def growth_ok(self) -> bool:
        return self.growth_margin >= -1e-12

    @property
    def passed(self) -> bool:
        return self.lipschitz_ok and self.tv_ok and self.growth_ok


def verify_source_properties(src: SourceDescriptor, x_probes, t_probes,
                             u_probes) -> SourcePropertyReport:
    """Check the declared Lipschitz, spatial-TV and growth bounds on probes.

    Args:
        src: descriptor under test.
        x_probes: positions (sorted internally for the TV sweep).
        t_probes: times.
        u_probes: state values.

    Returns:
        SourcePropertyReport with the worst observed margins.
    """
    xs = np.sort(np.asarray(x_probes, dtype=float))
    ts = np.asarray(t_probes, dtype=float)
    us = np.asarray(u_probes, dtype=float)
    if xs.size < 2 or us.size < 2 or ts.size < 1:
        raise ValueError("need at least 2 x probes, 2 u probes and 1 t probe")

    # g on the full probe lattice: shape (nx, nt, nu)
    G = np.asarray(
        src.eval(xs[:, None, None], ts[None, :, None], us[None, None, :]),
        dtype=float,
    )
    G = np.broadcast_to(G, (xs.size, ts.size, us.size))

    # Lipschitz in u: worst pairwise difference quotient at fixed (x, t).
    du = np.abs(us[:, None] - us[None, :])
    dg = np.abs(G[:, :, :, None] - G[:, :, None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(du > 0.0, dg / du, 0.0)
    lipschitz_observed = float(quot.max())

    # Spatial TV at fixed (t, u) against B(t).
    tv = np.sum(np.abs(np.diff(G, axis=0)), axis=0)  # (nt, nu)
    B = np.array([float(src.tv_bound(t)) for t in ts])
    tv_margin = float((B[:, None] - tv).min())

    # Growth: |g| <= growth_const (1 + |u|).
    allowed = src.growth_const * (1.0 + np.abs(us))[None, None, :]
    growth_margin = float((allowed - np.abs(G)).min())

    return SourcePropertyReport(
        lipschitz_declared=src.lipschitz_u,
        lipschitz_observed=lipschitz_observed,
        tv_margin=tv_margin,
        growth_margin=growth_margin,
    )
