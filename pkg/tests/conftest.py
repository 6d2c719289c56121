import numpy as np
import pytest

from qecsense import fixtures
from qecsense.hnls import solve_hl_coefficient
from qecsense.noise import apply_gauge, build_span


@pytest.fixture(scope="session")
def qutrit_model():
    return fixtures.qutrit_model()


@pytest.fixture(scope="session")
def qutrit_span(qutrit_model):
    return build_span(qutrit_model)


@pytest.fixture(scope="session")
def qutrit_solution(qutrit_model, qutrit_span):
    return solve_hl_coefficient(qutrit_model, qutrit_span)


@pytest.fixture(scope="session")
def qutrit_gauged(qutrit_model, qutrit_solution):
    sol = qutrit_solution
    return apply_gauge(qutrit_model, sol.rho0, sol.rho1)


@pytest.fixture(scope="session")
def zx_model():
    return fixtures.qubit_zx_model()


@pytest.fixture(scope="session")
def zx_solution(zx_model):
    return solve_hl_coefficient(zx_model)


@pytest.fixture(scope="session")
def generic_model():
    return fixtures.generic_hl_model()


@pytest.fixture(scope="session")
def generic_solution(generic_model):
    return solve_hl_coefficient(generic_model)


@pytest.fixture(scope="session")
def generic_gauged(generic_model, generic_solution):
    sol = generic_solution
    return apply_gauge(generic_model, sol.rho0, sol.rho1)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
