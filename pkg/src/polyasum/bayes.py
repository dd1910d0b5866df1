"""Conjugate posterior update and Bayes estimator.

Observing a configuration mu updates a Gamma random measure prior with
parameters (z, rho) to one with parameters (z/(1+z), rho + mu); in the
rate parametrization a = (1-z)/z this is the classical a -> a + 1 step.
The Bayes estimator of the directing intensity is z (rho + mu), and the
posterior factorizes as a convolution of independent Gamma measures
over rho and over mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state_space import (InvalidMeasureError, PointConfiguration,
                          ReferenceMeasure, superpose)
from .transforms import ParameterError, _check_z_open


class DecompositionError(ValueError):
    """Raised when a posterior base cannot be split as rho + mu."""


@dataclass(frozen=True)
class PosteriorSpec:
    """Posterior parameters: z_post, the base measure rho + mu, and the
    rate a_post stored redundantly.

    z and a are linked by a = (1-z)/z; the constructor enforces the
    link so silent drift between the two parametrizations cannot
    corrupt downstream computations.
    """

    z_post: float
    base: ReferenceMeasure
    a_post: float

    def __post_init__(self):
        _check_z_open(self.z_post)
        implied = (1.0 - self.z_post) / self.z_post
        if not np.isclose(self.a_post, implied, rtol=1e-12, atol=0.0):
            raise ParameterError(
                f"a_post={self.a_post} inconsistent with z_post={self.z_post} "
                f"(implied a={implied})")


def posterior_params(z: float, rho: ReferenceMeasure,
                     mu: PointConfiguration) -> PosteriorSpec:
    """Posterior of a (z, rho) Gamma-measure prior given observation mu.

    Returns (z/(1+z), rho + mu, a + 1).  An empty observation still
    updates the parameters: seeing zero points is evidence too.
    """
    z = _check_z_open(z)
    z_post = z / (1.0 + z)
    a_post = (1.0 - z) / z + 1.0
    return PosteriorSpec(z_post=z_post, base=superpose(rho, mu), a_post=a_post)


def bayes_estimator(z: float, rho: ReferenceMeasure,
                    mu: PointConfiguration) -> ReferenceMeasure:
    """The posterior-mean intensity measure z (rho + mu)."""
    z = _check_z_open(z)
    return superpose(rho, mu).scale(z)


def posterior_intensity(spec: PosteriorSpec) -> ReferenceMeasure:
    """First-moment measure of the posterior: (z_post/(1-z_post)) base.

    The scale factor equals the prior z, which is how the estimator
    z (rho + mu) drops out of the posterior's Campbell measure.
    """
    factor = spec.z_post / (1.0 - spec.z_post)
    return spec.base.scale(factor)


def convolution_split(spec: PosteriorSpec, mu: PointConfiguration):
    """Split a posterior over rho + mu into independent components.

    Returns two specs with the same z_post whose bases are rho and mu;
    their independent superposition has the posterior's law.  Fails
    loudly when the base does not contain mu (the split only applies
    to genuine rho + mu composites).
    """
    if spec.base.window != mu.window:
        raise InvalidMeasureError("posterior base and mu share no window")
    window = spec.base.window
    remaining = {loc: w for loc, w in spec.base.atoms}
    for loc, mult in mu.points:
        have = remaining.get(loc)
        if have is None or have < mult - 1e-9:
            raise DecompositionError(
                f"base atom at {loc!r} has weight {have}, cannot remove "
                f"multiplicity {mult}")
        left = have - mult
        if left <= 1e-9:
            del remaining[loc]
        else:
            remaining[loc] = left
    rho_part = ReferenceMeasure(
        window, spec.base.cell_masses,
        tuple(sorted(remaining.items(), key=lambda kv: repr(kv[0]))))
    mu_part = ReferenceMeasure(
        window, np.zeros(window.n_cells),
        tuple((loc, float(k)) for loc, k in mu.points))
    return (PosteriorSpec(spec.z_post, rho_part, spec.a_post),
            PosteriorSpec(spec.z_post, mu_part, spec.a_post))
