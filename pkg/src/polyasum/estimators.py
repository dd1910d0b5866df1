"""Parameter recovery for the doubly stochastic model.

Per unit of reference mass, a Polya sum process with parameters
(z, w rho0) has point density u = w z/(1-z) (with multiplicity) and
distinct-point density v = -w log(1-z).  Observing (u, v) therefore
pins (z, w) down uniquely: the ratio u/v determines z through the
strictly increasing map R(z) = [z/(1-z)]/(-log(1-z)), and v then
yields w.  The plug-in Papangelou kernel z_hat (w_hat rho0 + mu) is at
the same time the Bayes estimator of the intensity under any mixing
prior over (z, w).

These are finite-window estimates of almost-sure limiting densities;
their sampling error shrinks as the window mass grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state_space import (PointConfiguration, ReferenceMeasure, count,
                          distinct_count, superpose)

_Z_TOL = 1e-13
_Z_LO = 1e-15
_Z_HI = 1.0 - 1e-15


class InfeasibleDensitiesError(ValueError):
    """Raised when (u, v) lies outside the model's range.

    u <= v (with u > 0) or v = 0 < u cannot come from any (z, w); the
    raw values are reported rather than projected onto the feasible
    set, since silent clamping would mask model misfit.
    """

    def __init__(self, u: float, v: float):
        self.u = u
        self.v = v
        ratio = u / v if v > 0 else math.inf
        super().__init__(
            f"densities (u={u}, v={v}) admit no (z, w): need u > v > 0 "
            f"or u = v = 0 (ratio u/v = {ratio})")


@dataclass(frozen=True)
class DensityStats:
    """Empirical densities: points per unit reference mass, with and
    without multiplicity."""

    u: float
    v: float
    window_mass: float

    def __post_init__(self):
        if self.window_mass <= 0:
            raise ValueError("window_mass must be > 0")
        if self.v < 0 or self.u < self.v - 1e-12:
            raise ValueError(f"need u >= v >= 0, got u={self.u}, v={self.v}")


@dataclass(frozen=True)
class ZWEstimate:
    """Solution of the density equations w z/(1-z) = u, -w log(1-z) = v."""

    z_hat: float
    w_hat: float
    converged: bool
    residual: float


def stat_U(mu: PointConfiguration, rho0: ReferenceMeasure,
           cells=None) -> float:
    """Point density with multiplicity: count(mu, B) / rho0(B)."""
    if cells is None:
        cells = rho0.window.all_cells
    mass = rho0.mass_of_cells(cells)
    if mass <= 0:
        raise ValueError("estimation region has zero reference mass")
    return count(mu, cells) / mass


def stat_V(mu: PointConfiguration, rho0: ReferenceMeasure,
           cells=None) -> float:
    """Distinct-point density: distinct_count(mu, B) / rho0(B)."""
    if cells is None:
        cells = rho0.window.all_cells
    mass = rho0.mass_of_cells(cells)
    if mass <= 0:
        raise ValueError("estimation region has zero reference mass")
    return distinct_count(mu, cells) / mass


def density_stats(mu: PointConfiguration, rho0: ReferenceMeasure,
                  cells=None) -> DensityStats:
    """Both empirical densities of a configuration over one region."""
    if cells is None:
        cells = rho0.window.all_cells
    mass = rho0.mass_of_cells(cells)
    if mass <= 0:
        raise ValueError("estimation region has zero reference mass")
    return DensityStats(u=count(mu, cells) / mass,
                        v=distinct_count(mu, cells) / mass,
                        window_mass=mass)


def density_ratio(z) -> np.ndarray:
    """R(z) = [z/(1-z)] / (-log(1-z)), strictly increasing on (0, 1)
    with R(0+) = 1 and R(1-) = +inf."""
    z = np.asarray(z, dtype=float)
    return (z / (1.0 - z)) / (-np.log1p(-z))


def _solve_ratio(c: np.ndarray) -> np.ndarray:
    """Solve R(z) = c for arrays of ratios c > 1 by monotone bisection."""
    lo = np.full_like(c, _Z_LO)
    hi = np.full_like(c, _Z_HI)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        too_big = density_ratio(mid) > c
        hi = np.where(too_big, mid, hi)
        lo = np.where(too_big, lo, mid)
        if float(np.max(hi - lo)) < _Z_TOL:
            break
    return 0.5 * (lo + hi)


def solve_zw_batch(u: np.ndarray, v: np.ndarray):
    """Vectorized (z, w) recovery.

    Returns (z, w, feasible): infeasible entries get z = w = nan and
    feasible = False; (0, 0) maps to the degenerate solution (0, 0).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = np.full_like(u, np.nan)
    w = np.full_like(u, np.nan)
    zero = (u == 0) & (v == 0)
    z[zero] = 0.0
    w[zero] = 0.0
    solvable = (v > 0) & (u > v)
    if solvable.any():
        zs = _solve_ratio(u[solvable] / v[solvable])
        z[solvable] = zs
        w[solvable] = v[solvable] / (-np.log1p(-zs))
    return z, w, zero | solvable


def solve_zw(u: float, v: float) -> ZWEstimate:
    """Recover (z, w) from the densities (u, v).

    (0, 0) maps to the degenerate pair (0, 0); u > v > 0 has a unique
    solution found by bisecting the strictly increasing ratio map;
    anything else is outside the model and raises
    :class:`InfeasibleDensitiesError`.
    """
    u = float(u)
    v = float(v)
    if u < 0 or v < 0:
        raise ValueError(f"densities must be >= 0, got u={u}, v={v}")
    if u == 0 and v == 0:
        return ZWEstimate(z_hat=0.0, w_hat=0.0, converged=True, residual=0.0)
    if v <= 0 or u <= v:
        raise InfeasibleDensitiesError(u, v)
    z = float(_solve_ratio(np.array([u / v]))[0])
    w = v / (-math.log1p(-z))
    residual = max(abs(w * z / (1.0 - z) - u), abs(-w * math.log1p(-z) - v))
    converged = residual <= 1e-9 * max(1.0, u, v)
    return ZWEstimate(z_hat=z, w_hat=w, converged=converged, residual=residual)


def papangelou_kernel(mu: PointConfiguration, rho0: ReferenceMeasure,
                      cells=None) -> ReferenceMeasure:
    """Plug-in conditional intensity z_hat (w_hat rho0 + mu).

    (z_hat, w_hat) are estimated from mu itself over the given cell
    region (default: the whole window); the same measure is the
    plug-in Bayes estimator of the directing intensity.
    """
    stats = density_stats(mu, rho0, cells)
    est = solve_zw(stats.u, stats.v)
    if est.z_hat == 0.0:
        return rho0.scale(0.0)
    return superpose(rho0.scale(est.w_hat), mu).scale(est.z_hat)
