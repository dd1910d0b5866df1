import numpy as np
import pytest

from polyasum import ReferenceMeasure, TestFunction, Window


@pytest.fixture
def window4():
    return Window.interval(0.0, 1.0, 4)


@pytest.fixture
def rho_mass2(window4):
    return ReferenceMeasure.uniform(window4, 2.0)


@pytest.fixture
def rho_mass1(window4):
    return ReferenceMeasure.uniform(window4, 1.0)


@pytest.fixture
def ones(window4):
    return TestFunction.constant(window4, 1.0)


@pytest.fixture
def zeros(window4):
    return TestFunction.constant(window4, 0.0)


def make_test_function(window, rng, high=3.0):
    return TestFunction(window, rng.uniform(0.0, high, window.n_cells))


def tv_distance(counts, pmf_table):
    """Total variation between an empirical count sample and a pmf."""
    counts = np.asarray(counts)
    kmax = max(int(counts.max()), len(pmf_table) - 1)
    emp = np.bincount(counts, minlength=kmax + 1) / counts.size
    pmf = np.zeros(kmax + 1)
    pmf[:len(pmf_table)] = pmf_table[:kmax + 1]
    # mass of the pmf beyond the table is below its construction tol
    return 0.5 * np.abs(emp - pmf).sum() + 0.5 * max(0.0, 1.0 - pmf.sum())
