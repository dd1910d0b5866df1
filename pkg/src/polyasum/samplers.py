"""Random generation of Poisson processes, Gamma random measures, and
Polya sum processes.

Three routes produce Polya samples:

* ``direct`` -- a Poisson number of clusters placed i.i.d. from the
  normalized reference measure, each carrying an independent
  logarithmic-series multiplicity.  Exact; validated against the
  closed-form Laplace functional.
* ``cox`` -- draw a Gamma random measure by truncated inverse-Levy
  (Ferguson-Klass) and then a Poisson process with that atomic
  intensity.  Exact up to the documented O(eps) truncation.
* posterior draws combine a Gamma measure over the prior reference
  measure with independent Gamma weights at the observed points.

Every sampler has a single-draw form returning state_space objects and
a ``*_batch`` form returning flat record arrays (one row per located
point or atom) for Monte Carlo at scale.  Samplers are deterministic
functions of (inputs, rng state); parallel use should give each
replica stream its own :class:`RngSeed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expint import e1, e1_inverse
from .state_space import (AtomicMeasure, InvalidMeasureError,
                          PointConfiguration, ReferenceMeasure, TestFunction,
                          Window)
from .transforms import ParameterError, _check_z_half_open, _check_z_open


@dataclass(frozen=True)
class PolyaParams:
    """The parameter pair (z, rho); carries a = (1-z)/z for z > 0."""

    z: float
    rho: ReferenceMeasure

    def __post_init__(self):
        object.__setattr__(self, "z", _check_z_half_open(self.z))

    @property
    def a(self) -> float:
        if self.z == 0.0:
            raise ParameterError("a = (1-z)/z is undefined at z = 0")
        return (1.0 - self.z) / self.z

    @property
    def window(self) -> Window:
        return self.rho.window


@dataclass(frozen=True)
class MixingMeasure:
    """A discrete prior over (z, w) pairs scaling a base measure rho0.

    Atoms are (z, w, p) with probabilities summing to 1; (0, 0) is the
    admissible degenerate atom producing empty configurations.
    """

    rho0: ReferenceMeasure
    atoms: tuple  # ((z, w, p), ...)

    def __post_init__(self):
        cleaned = []
        for z, w, p in self.atoms:
            z, w, p = float(z), float(w), float(p)
            _check_z_half_open(z)
            if w < 0:
                raise ParameterError(f"w must be >= 0, got {w}")
            if p <= 0:
                raise ParameterError(f"atom probability must be > 0, got {p}")
            cleaned.append((z, w, p))
        if abs(sum(p for _, _, p in cleaned) - 1.0) > 1e-12:
            raise ParameterError("mixing probabilities must sum to 1")
        object.__setattr__(self, "atoms", tuple(cleaned))

    @property
    def window(self) -> Window:
        return self.rho0.window


@dataclass(frozen=True)
class RngSeed:
    """Reproducible RNG root: same (seed, stream) -> same sample path."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngSeed, an integer seed, or a ready Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSeed):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngSeed(int(rng)).generator()
    raise TypeError(f"cannot build a Generator from {rng!r}")


# ---------------------------------------------------------------------------
# Flat batch containers
# ---------------------------------------------------------------------------

def _empty_coords(window: Window):
    if window.mode == "sites":
        return np.empty(0, dtype=np.int64)
    return np.empty((0, window.dimension))


@dataclass
class ConfigurationBatch:
    """n point configurations as flat record arrays.

    One record per distinct located point: replica index, flat cell
    index, multiplicity, and raw coordinates.  Records with equal
    coordinates can only arise on the atoms of an atomic reference
    measure; conversions to objects merge them.
    """

    window: Window
    n: int
    rep: np.ndarray
    cell: np.ndarray
    mult: np.ndarray
    coords: np.ndarray

    def zeta(self, f: TestFunction) -> np.ndarray:
        """Per-replica integral of f, shape (n,)."""
        contrib = self.mult * f.values[self.cell]
        return np.bincount(self.rep, weights=contrib, minlength=self.n)

    def counts(self, cells=None) -> np.ndarray:
        """Per-replica point counts with multiplicity."""
        if cells is None:
            return np.bincount(self.rep, weights=self.mult,
                               minlength=self.n).astype(np.int64)
        mask = np.isin(self.cell, np.asarray(cells, dtype=np.int64))
        return np.bincount(self.rep[mask], weights=self.mult[mask],
                           minlength=self.n).astype(np.int64)

    def distinct_counts(self, cells=None) -> np.ndarray:
        """Per-replica counts of distinct locations."""
        if cells is None:
            return np.bincount(self.rep, minlength=self.n)
        mask = np.isin(self.cell, np.asarray(cells, dtype=np.int64))
        return np.bincount(self.rep[mask], minlength=self.n)

    def to_configurations(self) -> list:
        out = []
        order = np.argsort(self.rep, kind="stable")
        rep = self.rep[order]
        bounds = np.searchsorted(rep, np.arange(self.n + 1))
        sites = self.window.mode == "sites"
        for i in range(self.n):
            rows = order[bounds[i]:bounds[i + 1]]
            merged = {}
            for r in rows:
                loc = (self.window.sites[self.coords[r]] if sites
                       else tuple(float(v) for v in self.coords[r]))
                merged[loc] = merged.get(loc, 0) + int(self.mult[r])
            out.append(PointConfiguration(self.window, tuple(merged.items())))
        return out


@dataclass
class AtomicBatch:
    """n atomic measures as flat record arrays (rep, cell, weight, coords)."""

    window: Window
    n: int
    rep: np.ndarray
    cell: np.ndarray
    weight: np.ndarray
    coords: np.ndarray

    def zeta(self, h: TestFunction) -> np.ndarray:
        contrib = self.weight * h.values[self.cell]
        return np.bincount(self.rep, weights=contrib, minlength=self.n)

    def masses(self) -> np.ndarray:
        return np.bincount(self.rep, weights=self.weight, minlength=self.n)

    def to_measures(self) -> list:
        out = []
        order = np.argsort(self.rep, kind="stable")
        rep = self.rep[order]
        bounds = np.searchsorted(rep, np.arange(self.n + 1))
        sites = self.window.mode == "sites"
        for i in range(self.n):
            rows = order[bounds[i]:bounds[i + 1]]
            merged = {}
            for r in rows:
                loc = (self.window.sites[self.coords[r]] if sites
                       else tuple(float(v) for v in self.coords[r]))
                merged[loc] = merged.get(loc, 0.0) + float(self.weight[r])
            out.append(AtomicMeasure(self.window, tuple(merged.items())))
        return out


def _empty_config_batch(window: Window, n: int) -> ConfigurationBatch:
    return ConfigurationBatch(window, n, np.empty(0, dtype=np.int64),
                              np.empty(0, dtype=np.int64),
                              np.empty(0, dtype=np.int64),
                              _empty_coords(window))


def _empty_atomic_batch(window: Window, n: int) -> AtomicBatch:
    return AtomicBatch(window, n, np.empty(0, dtype=np.int64),
                       np.empty(0, dtype=np.int64), np.empty(0),
                       _empty_coords(window))


def _concat_coords(window: Window, parts) -> np.ndarray:
    parts = [p for p in parts if len(p)]
    if not parts:
        return _empty_coords(window)
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Poisson processes
# ---------------------------------------------------------------------------

def sample_poisson_batch(intensity, n: int, rng) -> ConfigurationBatch:
    """n independent Poisson configurations driven by ``intensity``.

    Diffuse mass produces simple points uniform within their cells;
    each atom (x, w) receives a Poisson(w) multiplicity at exactly x.
    """
    rng = as_generator(rng)
    if isinstance(intensity, AtomicMeasure):
        diffuse = np.zeros(intensity.window.n_cells)
        atoms = intensity.atoms
    elif isinstance(intensity, ReferenceMeasure):
        diffuse = intensity.cell_masses
        atoms = intensity.atoms
    else:
        raise TypeError("intensity must be a ReferenceMeasure or AtomicMeasure")
    window = intensity.window

    reps, cells, mults, coords = [], [], [], []
    if diffuse.sum() > 0:
        counts = rng.poisson(lam=diffuse, size=(n, diffuse.size))
        rep_idx, cell_idx = np.nonzero(counts)
        k = counts[rep_idx, cell_idx]
        rep_flat = np.repeat(rep_idx, k)
        cell_flat = np.repeat(cell_idx, k)
        reps.append(rep_flat)
        cells.append(cell_flat)
        mults.append(np.ones(rep_flat.size, dtype=np.int64))
        if window.mode == "sites":
            coords.append(cell_flat.copy())
        else:
            coords.append(window.uniform_in_cells(cell_flat, rng))
    if atoms:
        weights = np.array([w for _, w in atoms])
        live = weights > 0
        if live.any():
            k = rng.poisson(lam=weights[live], size=(n, int(live.sum())))
            rep_idx, a_idx = np.nonzero(k)
            mult = k[rep_idx, a_idx]
            live_atoms = [atoms[i] for i in np.flatnonzero(live)]
            atom_cells = np.array([window.cell_of(loc) for loc, _ in live_atoms],
                                  dtype=np.int64)
            reps.append(rep_idx)
            cells.append(atom_cells[a_idx])
            mults.append(mult.astype(np.int64))
            if window.mode == "sites":
                coords.append(atom_cells[a_idx].copy())
            else:
                pts = np.array([loc for loc, _ in live_atoms], dtype=float)
                coords.append(pts[a_idx])
    if not reps:
        return _empty_config_batch(window, n)
    return ConfigurationBatch(
        window, n,
        np.concatenate(reps), np.concatenate(cells),
        np.concatenate(mults), _concat_coords(window, coords))


def sample_poisson(intensity, rng) -> PointConfiguration:
    """One Poisson configuration; see :func:`sample_poisson_batch`."""
    return sample_poisson_batch(intensity, 1, rng).to_configurations()[0]


def _poisson_from_atomic_batch(kappa: AtomicBatch, rng) -> ConfigurationBatch:
    """Poisson configurations directed by a batch of atomic intensities."""
    rng = as_generator(rng)
    k = rng.poisson(lam=kappa.weight) if kappa.weight.size else \
        np.empty(0, dtype=np.int64)
    hit = k > 0
    return ConfigurationBatch(
        kappa.window, kappa.n, kappa.rep[hit], kappa.cell[hit],
        k[hit].astype(np.int64),
        kappa.coords[hit] if len(kappa.coords) else kappa.coords)


# ---------------------------------------------------------------------------
# Gamma random measures (truncated inverse-Levy)
# ---------------------------------------------------------------------------

def sample_gamma_measure_batch(params: PolyaParams, eps: float, n: int,
                               rng) -> AtomicBatch:
    """n truncated Ferguson-Klass draws of the Gamma random measure.

    With a = (1-z)/z and m the total reference mass, jump sizes solve
    m E1(a r_k) = Gamma_k for unit-rate Poisson arrival times Gamma_k,
    which is the inverse of the Levy tail m int_r^inf s^-1 e^-as ds.
    Generation stops at the first jump whose expected remaining mass
    (m/a)(1 - e^(-a r)) falls below eps, and that expected remainder is
    added as one extra atom, so the total mass is unbiased while the
    atom count is truncated.  Locations are i.i.d. rho/m, atoms of rho
    included in proportion.
    """
    if eps <= 0:
        raise ParameterError(f"truncation threshold must be > 0, got {eps}")
    rng = as_generator(rng)
    window = params.window
    if params.z == 0.0:
        return _empty_atomic_batch(window, n)
    a = params.a
    m = params.rho.total_mass
    if m == 0.0:
        return _empty_atomic_batch(window, n)
    mean_total = m / a

    if eps >= mean_total:
        # even the full process has expected mass below the threshold:
        # emit only the remainder atom
        weights = np.full(n, mean_total)
        reps = np.arange(n, dtype=np.int64)
        cells, coords, _ = params.rho.sample_locations(n, rng)
        return AtomicBatch(window, n, reps, cells, weights, coords)

    r_eps = -math.log1p(-eps * a / m) / a
    lam_eps = m * e1(a * r_eps)
    n_jumps = rng.poisson(lam_eps, size=n)
    total = int(n_jumps.sum())
    # arrival times below lam_eps are i.i.d. uniforms; the first
    # arrival beyond is lam_eps + Exp(1) by memorylessness.  The
    # (0, 1] form keeps arrival times strictly positive.
    gammas_below = (1.0 - rng.random(size=total)) * lam_eps
    gamma_last = lam_eps + rng.exponential(size=n)
    rep_below = np.repeat(np.arange(n, dtype=np.int64), n_jumps)

    radii_below = e1_inverse(gammas_below / m) / a if total else np.empty(0)
    radii_last = e1_inverse(gamma_last / m) / a
    remainder = (m / a) * (-np.expm1(-a * radii_last))

    reps = np.concatenate([rep_below, np.arange(n, dtype=np.int64),
                           np.arange(n, dtype=np.int64)])
    weights = np.concatenate([radii_below, radii_last, remainder])
    cells, coords, _ = params.rho.sample_locations(weights.size, rng)
    return AtomicBatch(window, n, reps, cells, weights, coords)


def sample_gamma_measure(params: PolyaParams, eps: float, rng) -> AtomicMeasure:
    """One truncated Gamma-measure draw; see the batch form for the
    algorithm.  z = 0 yields the zero measure."""
    return sample_gamma_measure_batch(params, eps, 1, rng).to_measures()[0]


# ---------------------------------------------------------------------------
# Polya sum process samplers
# ---------------------------------------------------------------------------

def _merge_atom_clusters(rep, cell, mult, coords, atom_idx):
    """Merge records that landed on the same reference atom."""
    on_atom = atom_idx >= 0
    if not on_atom.any():
        return rep, cell, mult, coords
    n_atoms = int(atom_idx.max()) + 1
    key = rep[on_atom] * n_atoms + atom_idx[on_atom]
    _, first_pos, inv = np.unique(key, return_index=True,
                                  return_inverse=True)
    merged_mult = np.bincount(inv, weights=mult[on_atom]).astype(np.int64)
    src = np.flatnonzero(on_atom)
    first = src[first_pos]
    keep = ~on_atom
    rep_out = np.concatenate([rep[keep], rep[first]])
    cell_out = np.concatenate([cell[keep], cell[first]])
    mult_out = np.concatenate([mult[keep], merged_mult])
    coords_out = np.concatenate([coords[keep], coords[first]]) \
        if len(coords) else coords
    return rep_out, cell_out, mult_out, coords_out


def sample_polya_direct_batch(params: PolyaParams, n: int,
                              rng) -> ConfigurationBatch:
    """n Polya configurations by the distinct-atom construction.

    A Poisson(-log(1-z) * m) number of cluster locations is drawn
    i.i.d. from rho/m and each receives an independent
    logarithmic-series(z) multiplicity.  This reproduces the process's
    Laplace functional exactly (verified in the test suite, since it is
    a construction rather than a definition).
    """
    rng = as_generator(rng)
    window = params.window
    z = params.z
    m = params.rho.total_mass
    if z == 0.0 or m == 0.0:
        return _empty_config_batch(window, n)
    lam = -math.log1p(-z) * m
    n_clusters = rng.poisson(lam, size=n)
    total = int(n_clusters.sum())
    rep = np.repeat(np.arange(n, dtype=np.int64), n_clusters)
    cells, coords, atom_idx = params.rho.sample_locations(total, rng) \
        if total else (np.empty(0, dtype=np.int64), _empty_coords(window),
                       np.empty(0, dtype=np.int64))
    mult = rng.logseries(z, size=total).astype(np.int64)
    if params.rho.atoms and total:
        rep, cells, mult, coords = _merge_atom_clusters(
            rep, cells, mult, coords, atom_idx)
    return ConfigurationBatch(window, n, rep, cells, mult, coords)


def sample_polya_direct(params: PolyaParams, rng) -> PointConfiguration:
    """One Polya configuration by the distinct-atom construction."""
    return sample_polya_direct_batch(params, 1, rng).to_configurations()[0]


def sample_polya_cox_batch(params: PolyaParams, eps: float, n: int,
                           rng) -> ConfigurationBatch:
    """n Polya configurations via the Cox representation: draw a Gamma
    random measure, then a Poisson process with that intensity."""
    _check_z_open(params.z)
    rng = as_generator(rng)
    kappa = sample_gamma_measure_batch(params, eps, n, rng)
    return _poisson_from_atomic_batch(kappa, rng)


def sample_polya_cox(params: PolyaParams, eps: float, rng) -> PointConfiguration:
    """One Polya configuration via the Cox route."""
    return sample_polya_cox_batch(params, eps, 1, rng).to_configurations()[0]


# ---------------------------------------------------------------------------
# Posterior sampling
# ---------------------------------------------------------------------------

def sample_posterior_batch(mu: PointConfiguration, params: PolyaParams,
                           eps: float, n: int, rng) -> AtomicBatch:
    """n draws from the posterior law of the directing measure given mu.

    The posterior is a Gamma random measure with z' = z/(1+z) over
    rho + mu, realized as a convolution: an independent Gamma measure
    over rho plus, at each observed point (x, k), an independent
    Gamma(k, a+1) weight.
    """
    _check_z_open(params.z)
    rng = as_generator(rng)
    if mu.window != params.window:
        raise InvalidMeasureError("observation and parameters share no window")
    z_post = params.z / (1.0 + params.z)
    a_post = params.a + 1.0
    diffuse = sample_gamma_measure_batch(
        PolyaParams(z_post, params.rho), eps, n, rng)
    if not mu.points:
        return diffuse
    window = params.window
    mults = np.array([k for _, k in mu.points], dtype=float)
    point_cells = np.array([window.cell_of(loc) for loc, _ in mu.points],
                           dtype=np.int64)
    weights = rng.gamma(shape=mults, scale=1.0 / a_post,
                        size=(n, mults.size))
    rep = np.repeat(np.arange(n, dtype=np.int64), mults.size)
    cells = np.tile(point_cells, n)
    if window.mode == "sites":
        coords = cells.copy()
    else:
        pts = np.array([loc for loc, _ in mu.points], dtype=float)
        coords = np.tile(pts, (n, 1))
    return AtomicBatch(
        window, n,
        np.concatenate([diffuse.rep, rep]),
        np.concatenate([diffuse.cell, cells]),
        np.concatenate([diffuse.weight, weights.ravel()]),
        _concat_coords(window, [diffuse.coords, coords]))


def sample_posterior(mu: PointConfiguration, params: PolyaParams, eps: float,
                     rng) -> AtomicMeasure:
    """One posterior draw; see the batch form."""
    return sample_posterior_batch(mu, params, eps, 1, rng).to_measures()[0]


def _posterior_from_config_batch(mus: ConfigurationBatch, params: PolyaParams,
                                 eps: float, rng) -> AtomicBatch:
    """Per-replica posterior draws for a whole batch of observations.

    Used by the conjugacy checks: replica i of the output is a draw
    from the posterior given replica i of ``mus``.
    """
    _check_z_open(params.z)
    rng = as_generator(rng)
    z_post = params.z / (1.0 + params.z)
    a_post = params.a + 1.0
    diffuse = sample_gamma_measure_batch(
        PolyaParams(z_post, params.rho), eps, mus.n, rng)
    if not mus.rep.size:
        return diffuse
    weights = rng.gamma(shape=mus.mult.astype(float), scale=1.0 / a_post)
    return AtomicBatch(
        mus.window, mus.n,
        np.concatenate([diffuse.rep, mus.rep]),
        np.concatenate([diffuse.cell, mus.cell]),
        np.concatenate([diffuse.weight, weights]),
        _concat_coords(mus.window, [diffuse.coords, mus.coords]))


# ---------------------------------------------------------------------------
# Doubly stochastic mixtures
# ---------------------------------------------------------------------------

def sample_mixed_batch(mixing: MixingMeasure, route: str, eps: float, n: int,
                       rng):
    """n draws from the mixed Polya sum process.

    Each replica first draws latent parameters (z_i, w_i) from the
    mixing measure, then a Polya configuration with (z_i, w_i rho0) by
    the requested route.  Returns (batch, z_latent, w_latent) so
    estimator validation can see the truth.
    """
    if route not in ("direct", "cox"):
        raise ParameterError(f"route must be 'direct' or 'cox', got {route!r}")
    rng = as_generator(rng)
    probs = np.array([p for _, _, p in mixing.atoms])
    comp = rng.choice(len(mixing.atoms), size=n, p=probs / probs.sum())
    z_lat = np.array([mixing.atoms[c][0] for c in comp])
    w_lat = np.array([mixing.atoms[c][1] for c in comp])

    parts = []
    for c, (z, w, _) in enumerate(mixing.atoms):
        members = np.flatnonzero(comp == c)
        if members.size == 0:
            continue
        if z == 0.0 or w == 0.0:
            continue
        sub_params = PolyaParams(z, mixing.rho0.scale(w))
        if route == "direct":
            sub = sample_polya_direct_batch(sub_params, members.size, rng)
        else:
            sub = sample_polya_cox_batch(sub_params, eps, members.size, rng)
        parts.append((members, sub))

    window = mixing.window
    if not parts:
        return _empty_config_batch(window, n), z_lat, w_lat
    rep = np.concatenate([members[sub.rep] for members, sub in parts])
    cell = np.concatenate([sub.cell for _, sub in parts])
    mult = np.concatenate([sub.mult for _, sub in parts])
    coords = _concat_coords(window, [sub.coords for _, sub in parts])
    return ConfigurationBatch(window, n, rep, cell, mult, coords), z_lat, w_lat


def sample_mixed(mixing: MixingMeasure, route: str, eps: float, rng):
    """One mixed draw: (configuration, (z, w)) with the latent pair."""
    batch, z_lat, w_lat = sample_mixed_batch(mixing, route, eps, 1, rng)
    return batch.to_configurations()[0], (float(z_lat[0]), float(w_lat[0]))
