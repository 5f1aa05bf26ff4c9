"""Shared fixtures. Edge solves cost seconds each, so they are session-scoped."""
from __future__ import annotations

import pytest

import lyapprod as lp


@pytest.fixture(scope="session")
def gauss():
    return lp.Gaussian(0.0, 1.0)


@pytest.fixture(scope="session")
def fig2():
    return lp.fig2_model()


@pytest.fixture(scope="session")
def gauss_constants(gauss):
    # Solves both half-line measures once (~12 s); everything downstream reuses it.
    return lp.edge_constants(gauss)


@pytest.fixture(scope="session")
def gauss_left(gauss_constants):
    return gauss_constants.left


@pytest.fixture(scope="session")
def gauss_right(gauss_constants):
    return gauss_constants.right


@pytest.fixture(scope="session")
def fig2_constants(fig2):
    return lp.edge_constants(fig2)


@pytest.fixture(scope="session")
def op5(gauss):
    return lp.solve_invariant(5.0, gauss)
