"""Exponential integral E1 and its inverse.

The inverse-Levy sampler for Gamma random measures needs the tail mass
function of the Levy density r^-1 e^(-a r), which is E1 up to scaling,
and its inverse to map Poisson arrival times to jump sizes.  E1 is
evaluated by the classical power series for small arguments and by a
continued fraction (modified Lentz) for large ones; the inverse has no
closed form and is obtained by monotone bisection.
"""

from __future__ import annotations

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

# Crossover between the alternating series and the continued fraction.
# The series needs ~26 terms at x=2; the continued fraction reaches
# ~2e-14 relative accuracy there after 40 Lentz iterations.
_SERIES_CUTOFF = 2.0
_SERIES_TERMS = 26
_LENTZ_ITERS = 40
_TINY = 1e-300
_E1_AT_CUTOFF = 0.048900510708061118  # E1(_SERIES_CUTOFF)

# Bisection re-traverses its arrays ~40 times; chunks this size stay
# cache-resident, which is ~4x faster than streaming full arrays.
_CHUNK = 32768


def _e1_series(x: np.ndarray, terms: int = _SERIES_TERMS) -> np.ndarray:
    # E1(x) = -gamma - ln x + sum_{k>=1} (-1)^(k+1) x^k / (k * k!)
    total = np.zeros_like(x)
    term = np.ones_like(x)  # holds (-x)^k / k!
    for k in range(1, terms + 1):
        term *= -x
        term /= k
        total -= term / k
    return total - EULER_GAMMA - np.log(x)


def _e1_contfrac(x: np.ndarray, iters: int = _LENTZ_ITERS) -> np.ndarray:
    # E1(x) = e^-x * CF, CF = 1/(x+1-) 1^2/(x+3-) 2^2/(x+5-) ...
    b = x + 1.0
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, iters + 1):
        a = -float(i * i)
        b = b + 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        h = h * c * d
    return h * np.exp(-x)


def e1(x):
    """Exponential integral E1(x) = int_x^inf e^(-t)/t dt, x > 0.

    Accepts scalars or arrays; fully vectorized.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr <= 0.0):
        raise ValueError("e1 requires strictly positive arguments")
    out = np.empty_like(x_arr)
    small = x_arr <= _SERIES_CUTOFF
    if small.any():
        out[small] = _e1_series(x_arr[small])
    if (~small).any():
        out[~small] = _e1_contfrac(x_arr[~small])
    return float(out[0]) if scalar else out


def _invert_big(yb: np.ndarray) -> np.ndarray:
    # y > 1: the root lies below E1^-1(1) ~ 0.2194, where the series
    # with 10 terms is exact to ~1e-13 absolute.  ln(x*) sits within
    # [-gamma - y, -gamma - y + 0.25] because E1 = -gamma - ln x + delta
    # with 0 < delta < x; bisect over u = ln x, comparing delta(e^u)
    # against y + gamma + u so no log is needed inside the loop.
    rhs = yb + EULER_GAMMA
    lo = -rhs - 0.01
    hi = lo + 0.27
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        x = np.exp(mid)
        acc = x.copy()
        term = -x
        for k in range(2, 11):
            term *= x
            term /= -k
            acc -= term / k
        too_big = acc > mid + rhs
        lo = np.where(too_big, mid, lo)
        hi = np.where(too_big, hi, mid)
    return np.exp(0.5 * (lo + hi))


def _invert_mid(ys: np.ndarray) -> np.ndarray:
    # E1(cutoff) <= y <= 1: root in [0.21, cutoff], series territory.
    lo = np.full_like(ys, 0.21)
    hi = np.full_like(ys, _SERIES_CUTOFF)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        too_big = _e1_series(mid) > ys
        lo = np.where(too_big, mid, lo)
        hi = np.where(too_big, hi, mid)
    return 0.5 * (lo + hi)


def _invert_low(ys: np.ndarray) -> np.ndarray:
    # y < E1(cutoff): root in [cutoff, -ln y + 2], continued-fraction
    # territory (E1(x) < e^-x/x gives the upper end of the bracket).
    lo = np.full_like(ys, _SERIES_CUTOFF)
    hi = -np.log(ys) + 2.0
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        too_big = _e1_contfrac(mid) > ys
        lo = np.where(too_big, mid, lo)
        hi = np.where(too_big, hi, mid)
    return 0.5 * (lo + hi)


def e1_inverse(y):
    """Solve E1(x) = y for x > 0 by monotone bisection.

    E1 is strictly decreasing, so the root is unique.  The argument
    range is split in three so each branch uses a single evaluation
    scheme and a tight bracket; every branch bisects to ~1e-13
    relative accuracy in x.
    """
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)
    if np.any(y_arr <= 0.0):
        raise ValueError("e1_inverse requires strictly positive arguments")
    out = np.empty_like(y_arr)
    big = y_arr > 1.0
    low = y_arr < _E1_AT_CUTOFF
    mid_band = ~(big | low)
    for mask, solver in ((big, _invert_big), (mid_band, _invert_mid),
                         (low, _invert_low)):
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            continue
        for start in range(0, idx.size, _CHUNK):
            sel = idx[start:start + _CHUNK]
            out[sel] = solver(y_arr[sel])
    return float(out[0]) if scalar else out
