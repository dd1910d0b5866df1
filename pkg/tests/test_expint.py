"""The E1 evaluator against scipy's, and the inverse against round trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import exp1

from polyasum.expint import e1, e1_inverse


def test_matches_scipy_over_wide_range():
    x = np.concatenate([
        np.geomspace(1e-12, 2.0, 20000),
        np.linspace(2.0, 60.0, 20000),
        np.geomspace(60.0, 700.0, 2000),
    ])
    rel = np.abs(e1(x) - exp1(x)) / exp1(x)
    assert rel.max() < 1e-13


def test_round_trip_accuracy():
    x = np.concatenate([np.geomspace(1e-10, 2.0, 5000),
                        np.linspace(2.0, 600.0, 5000)])
    back = e1_inverse(e1(x))
    assert (np.abs(back - x) / x).max() < 1e-12


def test_scalar_interface():
    assert e1(1.0) == pytest.approx(exp1(1.0), rel=1e-14)
    assert e1_inverse(e1(0.37)) == pytest.approx(0.37, rel=1e-12)


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        e1(0.0)
    with pytest.raises(ValueError):
        e1(np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        e1_inverse(0.0)


@given(st.floats(min_value=1e-8, max_value=500.0))
@settings(max_examples=200, deadline=None)
def test_monotone_decreasing(x):
    assert e1(x) > e1(x * 1.01)


@given(st.floats(min_value=1e-6, max_value=30.0))
@settings(max_examples=100, deadline=None)
def test_inverse_is_right_inverse(y):
    assert e1(e1_inverse(y)) == pytest.approx(y, rel=1e-11)
