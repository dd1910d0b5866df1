"""Closed-form Laplace functionals and derived count distributions.

These are the analytic oracles every statistical check is measured
against.  A Gamma random measure with parameters (z, rho) has Laplace
functional exp[-int log(1 + z h/(1-z)) drho]; the point process it
directs has exp[-int log(1 + z(1-e^-g)/(1-z)) drho].  Per-window counts
follow a negative binomial law and cluster multiplicities a logarithmic
series law.  Everything is computed in log space: cell masses up to 1e4
would underflow plain products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state_space import (ReferenceMeasure, TestFunction,
                          _require_same_window, zeta)


class ParameterError(ValueError):
    """Raised when a process parameter is outside its admissible range."""


def _check_z_open(z: float) -> float:
    z = float(z)
    if not 0.0 < z < 1.0:
        raise ParameterError(f"z must lie in (0, 1), got {z}")
    return z


def _check_z_half_open(z: float) -> float:
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise ParameterError(f"z must lie in [0, 1), got {z}")
    return z


@dataclass(frozen=True)
class TransformResult:
    """A Laplace-functional value carried in log space."""

    log_value: float
    value: float

    @classmethod
    def from_log(cls, log_value: float) -> "TransformResult":
        return cls(log_value=float(log_value), value=float(np.exp(log_value)))


def _integrate_cellwise(rho: ReferenceMeasure, values: np.ndarray) -> float:
    """Exact integral of a per-cell array against rho (atoms included).

    Infinite values on zero-mass cells contribute nothing.
    """
    mass = rho.cell_masses
    pos = mass > 0
    total = float(np.dot(mass[pos], values[pos])) if pos.any() else 0.0
    for loc, w in rho.atoms:
        if w > 0:
            total += w * float(values[rho.window.cell_of(loc)])
    return total


def laplace_gp(h: TestFunction, z: float, rho: ReferenceMeasure) -> TransformResult:
    """Laplace functional of the Gamma random measure at h.

    exp[-int log(1 + z h(x)/(1-z)) rho(dx)], evaluated exactly as a
    finite sum over cells and atoms.
    """
    z = _check_z_open(z)
    _require_same_window(h, rho)
    integrand = np.log1p(z * h.values / (1.0 - z))
    return TransformResult.from_log(-_integrate_cellwise(rho, integrand))


def laplace_polya(g: TestFunction, z: float, rho: ReferenceMeasure) -> TransformResult:
    """Laplace functional of the Polya sum process at g.

    exp[-int log(1 + z(1-e^-g(x))/(1-z)) rho(dx)].  z = 0 gives the
    empty process, so the transform is identically 1.
    """
    z = _check_z_half_open(z)
    _require_same_window(g, rho)
    if z == 0.0:
        return TransformResult.from_log(0.0)
    integrand = np.log1p(z * (-np.expm1(-g.values)) / (1.0 - z))
    return TransformResult.from_log(-_integrate_cellwise(rho, integrand))


def joint_laplace(g: TestFunction, h: TestFunction, z: float,
                  rho: ReferenceMeasure) -> TransformResult:
    """Joint Laplace functional of (point process, directing measure).

    exp[-int log(1 + z(1 - e^-g + h)/(1-z)) drho]: the closed form of
    E[e^(-zeta_g(mu) - zeta_h(kappa))] shared by the forward
    (kappa then mu ~ Poisson(kappa)) and backward (mu then kappa from
    the posterior) decompositions.
    """
    z = _check_z_open(z)
    _require_same_window(g, h)
    _require_same_window(g, rho)
    effective = -np.expm1(-g.values) + h.values
    integrand = np.log1p(z * effective / (1.0 - z))
    return TransformResult.from_log(-_integrate_cellwise(rho, integrand))


def nb_pmf(k: int, m: float, z: float) -> float:
    """Negative binomial pmf: Gamma(m+k)/(Gamma(m) k!) (1-z)^m z^k.

    The count law of the Polya sum process on a region of reference
    mass m.  Computed in log space.
    """
    if m <= 0:
        raise ParameterError(f"m must be > 0, got {m}")
    z = _check_z_open(z)
    k = int(k)
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    log_p = (math.lgamma(m + k) - math.lgamma(m) - math.lgamma(k + 1)
             + m * math.log1p(-z) + k * math.log(z))
    return math.exp(log_p)


def nb_pmf_table(m: float, z: float, tol: float = 1e-15) -> np.ndarray:
    """pmf values for k = 0, 1, ... until the geometric tail bound
    drops below ``tol``."""
    out = [nb_pmf(0, m, z)]
    k = 0
    while True:
        # pmf ratio z(m+k)/(k+1) is eventually < 1; bound the tail by a
        # geometric series at the current ratio
        ratio = z * (m + k + 1) / (k + 2)
        if ratio < 1 and out[-1] * ratio / (1 - ratio) < tol:
            break
        k += 1
        out.append(out[-1] * z * (m + k - 1) / k)
        if k > 100000:
            raise RuntimeError("nb_pmf_table failed to converge")
    return np.asarray(out)


def logseries_pmf(k: int, z: float) -> float:
    """Logarithmic series pmf z^k/(k (-log(1-z))), k >= 1.

    The multiplicity law of a single cluster of the distinct-atom
    construction.
    """
    z = _check_z_open(z)
    k = int(k)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    log_p = k * math.log(z) - math.log(k) - math.log(-math.log1p(-z))
    return math.exp(log_p)


def logseries_mean(z: float) -> float:
    """Mean of the logarithmic series law: z/((1-z)(-log(1-z)))."""
    z = _check_z_open(z)
    return z / ((1.0 - z) * (-math.log1p(-z)))


def polya_campbell_exact(f: TestFunction, g: TestFunction, z: float,
                         rho: ReferenceMeasure) -> float:
    """Exact Campbell functional E[zeta_f(mu) e^(-zeta_g(mu))].

    Differentiating the Laplace functional along g + t f at t = 0
    gives L(g) * int z f e^-g / (1 - z e^-g) drho.
    """
    z = _check_z_half_open(z)
    _require_same_window(f, g)
    _require_same_window(f, rho)
    if z == 0.0:
        return 0.0
    lap = laplace_polya(g, z, rho)
    decay = np.exp(-g.values)
    integrand = np.where(decay > 0,
                         z * f.values * decay / (1.0 - z * decay), 0.0)
    return lap.value * _integrate_cellwise(rho, integrand)


def empirical_laplace(samples, f: TestFunction):
    """Sample mean and standard error of e^(-zeta(., f)).

    Accepts point configurations or atomic measures.
    """
    if len(samples) < 2:
        raise ValueError("empirical_laplace needs at least 2 samples")
    vals = np.array([math.exp(-zeta(s, f)) for s in samples])
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return est, stderr


def empirical_laplace_from_values(zeta_values: np.ndarray):
    """Same as :func:`empirical_laplace`, from precomputed zeta values."""
    vals = np.exp(-np.asarray(zeta_values, dtype=float))
    if vals.size < 2:
        raise ValueError("need at least 2 samples")
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))
