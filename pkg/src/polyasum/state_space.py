"""Windows, cells, measures, and point configurations.

The observation space is either a d-dimensional box partitioned into a
regular grid of cells or a finite set of discrete sites.  All test
functions are piecewise constant on cells, so every integral against a
measure reduces to a finite sum over cells and atoms and is exact.

Locations are a tuple of float coordinates (box windows) or a site
label (discrete windows).  Two points coincide iff their coordinates
are bit-equal; multiplicities are merged only where coincidence is
constructed deliberately (atomic intensities, observed points).

All types are immutable values after construction and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

SCHEMA_VERSION = 1

Location = Union[tuple, str]


class WindowMismatchError(ValueError):
    """Raised when two objects defined over different windows meet."""


class InvalidMeasureError(ValueError):
    """Raised when a measure or configuration violates its invariants."""


def _require_same_window(a, b) -> None:
    if a.window != b.window:
        raise WindowMismatchError(
            f"objects live on different windows: {a.window!r} vs {b.window!r}")


@dataclass(frozen=True)
class Window:
    """A bounded observation window with an exact cell partition.

    mode "box": a product of ``bounds`` intervals split into a regular
    grid with ``cells_per_axis`` cells along each axis.
    mode "sites": a finite list of named sites, one cell per site.
    """

    mode: str
    bounds: tuple = ()           # ((lo, hi), ...) per axis, box mode
    cells_per_axis: tuple = ()   # cell counts per axis, box mode
    sites: tuple = ()            # site labels, sites mode

    def __post_init__(self):
        if self.mode == "box":
            if not self.bounds:
                raise InvalidMeasureError("box window needs at least one axis")
            if len(self.bounds) != len(self.cells_per_axis):
                raise InvalidMeasureError(
                    "bounds and cells_per_axis must have equal length")
            for (lo, hi) in self.bounds:
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise InvalidMeasureError(f"bad axis bounds ({lo}, {hi})")
            for n in self.cells_per_axis:
                if not (isinstance(n, (int, np.integer)) and n >= 1):
                    raise InvalidMeasureError("cell counts must be ints >= 1")
            object.__setattr__(self, "bounds",
                               tuple((float(lo), float(hi)) for lo, hi in self.bounds))
            object.__setattr__(self, "cells_per_axis",
                               tuple(int(n) for n in self.cells_per_axis))
        elif self.mode == "sites":
            if not self.sites:
                raise InvalidMeasureError("sites window needs at least one site")
            if len(set(self.sites)) != len(self.sites):
                raise InvalidMeasureError("site labels must be distinct")
            object.__setattr__(self, "sites", tuple(str(s) for s in self.sites))
        else:
            raise InvalidMeasureError(f"unknown window mode {self.mode!r}")

    @classmethod
    def box(cls, bounds: Sequence, cells_per_axis: Sequence[int]) -> "Window":
        return cls(mode="box", bounds=tuple(tuple(b) for b in bounds),
                   cells_per_axis=tuple(cells_per_axis))

    @classmethod
    def interval(cls, lo: float, hi: float, n_cells: int = 1) -> "Window":
        """1-d convenience constructor."""
        return cls.box([(lo, hi)], [n_cells])

    @classmethod
    def discrete(cls, sites: Sequence[str]) -> "Window":
        return cls(mode="sites", sites=tuple(sites))

    @property
    def dimension(self) -> int:
        return len(self.bounds) if self.mode == "box" else 0

    @property
    def n_cells(self) -> int:
        if self.mode == "sites":
            return len(self.sites)
        return int(np.prod(self.cells_per_axis))

    @property
    def all_cells(self) -> np.ndarray:
        return np.arange(self.n_cells)

    @property
    def cell_volume(self) -> float:
        """Lebesgue volume of one grid cell (1.0 for discrete sites)."""
        if self.mode == "sites":
            return 1.0
        vol = 1.0
        for (lo, hi), n in zip(self.bounds, self.cells_per_axis):
            vol *= (hi - lo) / n
        return vol

    def contains(self, loc: Location) -> bool:
        if self.mode == "sites":
            return loc in self.sites
        if not isinstance(loc, tuple) or len(loc) != self.dimension:
            return False
        return all(lo <= x <= hi for x, (lo, hi) in zip(loc, self.bounds))

    def cell_of(self, loc: Location) -> int:
        """Flat index of the cell containing ``loc``."""
        if self.mode == "sites":
            try:
                return self.sites.index(loc)
            except ValueError:
                raise InvalidMeasureError(f"unknown site {loc!r}") from None
        if not self.contains(loc):
            raise InvalidMeasureError(f"location {loc!r} outside window")
        flat = 0
        for x, (lo, hi), n in zip(loc, self.bounds, self.cells_per_axis):
            i = min(int((x - lo) / (hi - lo) * n), n - 1)
            flat = flat * n + i
        return flat

    def cells_of(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized cell lookup for an (M, d) coordinate array."""
        if self.mode == "sites":
            raise InvalidMeasureError("cells_of needs a box window")
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        flat = np.zeros(len(coords), dtype=np.int64)
        for axis, ((lo, hi), n) in enumerate(zip(self.bounds, self.cells_per_axis)):
            i = ((coords[:, axis] - lo) / (hi - lo) * n).astype(np.int64)
            np.clip(i, 0, n - 1, out=i)
            flat = flat * n + i
        return flat

    def uniform_in_cells(self, cells: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
        """Draw one uniform location inside each listed cell.

        Returns an (M, d) coordinate array (box mode only; discrete
        sites are their own locations).
        """
        if self.mode == "sites":
            raise InvalidMeasureError("uniform_in_cells needs a box window")
        cells = np.asarray(cells, dtype=np.int64)
        d = self.dimension
        coords = np.empty((cells.size, d))
        rem = cells
        # decode the flat index from the last axis backwards
        for axis in range(d - 1, -1, -1):
            lo, hi = self.bounds[axis]
            n = self.cells_per_axis[axis]
            idx = rem % n
            rem = rem // n
            width = (hi - lo) / n
            coords[:, axis] = lo + (idx + rng.random(cells.size)) * width
        return coords

    def location_from_coords(self, row: np.ndarray) -> Location:
        return tuple(float(v) for v in row)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "mode": self.mode}
        if self.mode == "box":
            out["bounds"] = [list(b) for b in self.bounds]
            out["cells"] = list(self.cells_per_axis)
        else:
            out["sites"] = list(self.sites)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Window":
        mode = data.get("mode")
        if mode == "box":
            return cls.box(data["bounds"], data["cells"])
        if mode == "sites":
            return cls.discrete(data["sites"])
        raise InvalidMeasureError(f"unknown window mode {mode!r}")


def _check_location(window: Window, loc: Location) -> Location:
    if window.mode == "box":
        loc = tuple(float(v) for v in loc) if isinstance(loc, (tuple, list)) else loc
    if not window.contains(loc):
        raise InvalidMeasureError(f"location {loc!r} outside window")
    return loc


@dataclass(frozen=True)
class PointConfiguration:
    """A finite point configuration with integer multiplicities."""

    window: Window
    points: tuple = ()  # ((location, multiplicity), ...)

    def __post_init__(self):
        cleaned = []
        seen = set()
        for loc, mult in self.points:
            loc = _check_location(self.window, loc)
            if not (isinstance(mult, (int, np.integer)) and mult >= 1):
                raise InvalidMeasureError(
                    f"multiplicity {mult!r} at {loc!r} must be an int >= 1")
            if loc in seen:
                raise InvalidMeasureError(f"duplicate location {loc!r}")
            seen.add(loc)
            cleaned.append((loc, int(mult)))
        object.__setattr__(self, "points", tuple(cleaned))

    @property
    def total_count(self) -> int:
        return sum(m for _, m in self.points)

    @property
    def n_distinct(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "window": self.window.to_dict(),
            "points": [{"loc": list(loc) if isinstance(loc, tuple) else loc,
                        "mult": m} for loc, m in self.points],
        }

    @classmethod
    def from_dict(cls, data: dict, window: Window | None = None) -> "PointConfiguration":
        win = window or Window.from_dict(data["window"])
        pts = tuple((tuple(p["loc"]) if isinstance(p["loc"], list) else p["loc"],
                     int(p["mult"])) for p in data.get("points", ()))
        return cls(win, pts)


@dataclass(frozen=True)
class AtomicMeasure:
    """A purely atomic measure: finitely many (location, weight) atoms."""

    window: Window
    atoms: tuple = ()  # ((location, weight), ...)

    def __post_init__(self):
        cleaned = []
        seen = set()
        for loc, w in self.atoms:
            loc = _check_location(self.window, loc)
            w = float(w)
            if not (w > 0.0 and math.isfinite(w)):
                raise InvalidMeasureError(f"atom weight {w!r} must be finite > 0")
            if loc in seen:
                raise InvalidMeasureError(f"duplicate atom location {loc!r}")
            seen.add(loc)
            cleaned.append((loc, w))
        object.__setattr__(self, "atoms", tuple(cleaned))

    @property
    def total_mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "window": self.window.to_dict(),
            "atoms": [{"loc": list(loc) if isinstance(loc, tuple) else loc,
                       "weight": w} for loc, w in self.atoms],
        }

    @classmethod
    def from_dict(cls, data: dict, window: Window | None = None) -> "AtomicMeasure":
        win = window or Window.from_dict(data["window"])
        atoms = tuple((tuple(a["loc"]) if isinstance(a["loc"], list) else a["loc"],
                       float(a["weight"])) for a in data.get("atoms", ()))
        return cls(win, atoms)


@dataclass(frozen=True)
class ReferenceMeasure:
    """A reference measure: nonnegative mass per cell plus optional atoms.

    Houses both the diffuse parameter measure and composites such as
    the measure-plus-configuration sums produced by :func:`superpose`.
    """

    window: Window
    cell_masses: np.ndarray = None
    atoms: tuple = ()  # ((location, weight >= 0), ...)

    def __post_init__(self):
        masses = self.cell_masses
        if masses is None:
            masses = np.zeros(self.window.n_cells)
        masses = np.asarray(masses, dtype=float)
        if masses.shape != (self.window.n_cells,):
            raise InvalidMeasureError(
                f"cell_masses must have shape ({self.window.n_cells},)")
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise InvalidMeasureError("cell masses must be finite and >= 0")
        masses = masses.copy()
        masses.setflags(write=False)
        object.__setattr__(self, "cell_masses", masses)

        cleaned = []
        seen = set()
        for loc, w in self.atoms:
            loc = _check_location(self.window, loc)
            w = float(w)
            if w < 0 or not math.isfinite(w):
                raise InvalidMeasureError(f"atom weight {w!r} must be finite >= 0")
            if loc in seen:
                raise InvalidMeasureError(f"duplicate atom location {loc!r}")
            seen.add(loc)
            cleaned.append((loc, w))
        object.__setattr__(self, "atoms", tuple(cleaned))

    @classmethod
    def uniform(cls, window: Window, total_mass: float) -> "ReferenceMeasure":
        """Spread ``total_mass`` evenly over the window's cells."""
        n = window.n_cells
        return cls(window, np.full(n, float(total_mass) / n))

    @property
    def is_diffuse(self) -> bool:
        return not self.atoms

    @property
    def total_mass(self) -> float:
        return float(self.cell_masses.sum() + sum(w for _, w in self.atoms))

    def mass_of_cells(self, cells) -> float:
        """Mass of a finite union of cells, atoms included."""
        cells = np.asarray(cells, dtype=np.int64)
        mass = float(self.cell_masses[cells].sum())
        if self.atoms:
            cell_set = set(cells.tolist())
            mass += sum(w for loc, w in self.atoms
                        if self.window.cell_of(loc) in cell_set)
        return mass

    def scale(self, factor: float) -> "ReferenceMeasure":
        if factor < 0:
            raise InvalidMeasureError("scale factor must be >= 0")
        return ReferenceMeasure(
            self.window, self.cell_masses * factor,
            tuple((loc, w * factor) for loc, w in self.atoms))

    def sample_locations(self, size: int, rng: np.random.Generator):
        """Draw i.i.d. locations from this measure normalized to mass 1.

        Returns ``(cells, coords, atom_idx)``: flat cell indices, raw
        coordinates ((size, d) float array for box windows, site
        indices for discrete ones), and the index of the atom hit
        (-1 for diffuse draws).  Used by every sampler.
        """
        weights = np.concatenate([
            self.cell_masses, np.array([w for _, w in self.atoms])]) \
            if self.atoms else self.cell_masses
        total = weights.sum()
        if total <= 0:
            raise InvalidMeasureError("cannot sample from a zero measure")
        n_cells = self.window.n_cells
        picks = rng.choice(weights.size, size=size, p=weights / total)
        atom_idx = np.where(picks >= n_cells, picks - n_cells, -1)
        cells = picks.copy()
        if self.atoms:
            atom_cells = np.array([self.window.cell_of(loc)
                                   for loc, _ in self.atoms], dtype=np.int64)
            hit = atom_idx >= 0
            cells[hit] = atom_cells[atom_idx[hit]]
        if self.window.mode == "sites":
            return cells, cells.copy(), atom_idx
        coords = self.window.uniform_in_cells(cells, rng)
        if self.atoms:
            hit = np.flatnonzero(atom_idx >= 0)
            if hit.size:
                atom_coords = np.array([loc for loc, _ in self.atoms],
                                       dtype=float)
                coords[hit] = atom_coords[atom_idx[hit]]
        return cells, coords, atom_idx

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "window": self.window.to_dict(),
            "masses": [float(v) for v in self.cell_masses],
            "atoms": [{"loc": list(loc) if isinstance(loc, tuple) else loc,
                       "weight": w} for loc, w in self.atoms],
        }

    @classmethod
    def from_dict(cls, data: dict, window: Window | None = None) -> "ReferenceMeasure":
        win = window or Window.from_dict(data["window"])
        masses = np.asarray(data.get("masses", np.zeros(win.n_cells)), dtype=float)
        atoms = tuple((tuple(a["loc"]) if isinstance(a["loc"], list) else a["loc"],
                       float(a["weight"])) for a in data.get("atoms", ()))
        return cls(win, masses, atoms)

    def __eq__(self, other):
        if not isinstance(other, ReferenceMeasure):
            return NotImplemented
        return (self.window == other.window
                and np.array_equal(self.cell_masses, other.cell_masses)
                and self.atoms == other.atoms)

    def __hash__(self):
        return hash((self.window, self.cell_masses.tobytes(), self.atoms))


@dataclass(frozen=True)
class TestFunction:
    """A nonnegative piecewise-constant function on the window's cells.

    Values may be +inf; that distinguished value makes e^-f vanish and
    turns Laplace functionals into void probabilities.
    """

    __test__ = False  # pytest: not a test class despite the name

    window: Window
    values: np.ndarray = None

    def __post_init__(self):
        vals = self.values
        if vals is None:
            vals = np.zeros(self.window.n_cells)
        vals = np.asarray(vals, dtype=float)
        if vals.shape != (self.window.n_cells,):
            raise InvalidMeasureError(
                f"values must have shape ({self.window.n_cells},)")
        if np.any(np.isnan(vals)) or np.any(vals < 0):
            raise InvalidMeasureError("test function values must be >= 0")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, window: Window, value: float) -> "TestFunction":
        return cls(window, np.full(window.n_cells, float(value)))

    @classmethod
    def indicator(cls, window: Window, cells, value: float = 1.0) -> "TestFunction":
        vals = np.zeros(window.n_cells)
        vals[np.asarray(cells, dtype=np.int64)] = float(value)
        return cls(window, vals)

    def __call__(self, loc: Location) -> float:
        return float(self.values[self.window.cell_of(loc)])

    def __add__(self, other: "TestFunction") -> "TestFunction":
        _require_same_window(self, other)
        return TestFunction(self.window, self.values + other.values)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION,
                "window": self.window.to_dict(),
                "values": [float(v) for v in self.values]}


Measure = Union[PointConfiguration, AtomicMeasure, ReferenceMeasure]


def zeta(measure: Measure, f: TestFunction) -> float:
    """Evaluate the integral of ``f`` against ``measure``.

    Exact finite sum: multiplicities weight point evaluations, atom
    weights weight atom evaluations, and cell masses weight cell
    values.  Infinite f-values on zero-mass cells contribute nothing.
    """
    _require_same_window(measure, f)
    win = measure.window
    if isinstance(measure, PointConfiguration):
        return float(sum(m * f.values[win.cell_of(loc)]
                         for loc, m in measure.points))
    if isinstance(measure, AtomicMeasure):
        return float(sum(w * f.values[win.cell_of(loc)]
                         for loc, w in measure.atoms))
    if isinstance(measure, ReferenceMeasure):
        mass = measure.cell_masses
        pos = mass > 0
        diffuse = float(np.dot(mass[pos], f.values[pos])) if pos.any() else 0.0
        atomic = sum(w * f.values[win.cell_of(loc)]
                     for loc, w in measure.atoms if w > 0)
        return float(diffuse + atomic)
    raise TypeError(f"cannot integrate against {type(measure).__name__}")


def count(mu: PointConfiguration, cells) -> int:
    """Number of points of ``mu`` in a cell union, with multiplicity."""
    cell_set = set(np.asarray(cells, dtype=np.int64).tolist())
    win = mu.window
    return int(sum(m for loc, m in mu.points if win.cell_of(loc) in cell_set))


def distinct_count(mu: PointConfiguration, cells) -> int:
    """Number of distinct point locations of ``mu`` in a cell union."""
    cell_set = set(np.asarray(cells, dtype=np.int64).tolist())
    win = mu.window
    return int(sum(1 for loc, _ in mu.points if win.cell_of(loc) in cell_set))


def superpose(rho: ReferenceMeasure, mu: PointConfiguration) -> ReferenceMeasure:
    """The measure rho + mu: each point of ``mu`` becomes added atom mass.

    Weights merge at coinciding locations; the diffuse part is
    untouched.
    """
    _require_same_window(rho, mu)
    merged = {loc: w for loc, w in rho.atoms}
    for loc, mult in mu.points:
        merged[loc] = merged.get(loc, 0.0) + float(mult)
    atoms = tuple(sorted(merged.items(), key=lambda kv: repr(kv[0])))
    return ReferenceMeasure(rho.window, rho.cell_masses, atoms)
