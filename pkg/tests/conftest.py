import numpy as np
import pytest

import trotterbench as tb


@pytest.fixture(scope="session")
def a_scalar():
    return tb.scalar_operator(1.0)


@pytest.fixture(scope="session")
def a_diag14():
    return tb.diagonalize(np.diag([1.0, 4.0]), role=tb.GENERATOR_ROLE)


@pytest.fixture(scope="session")
def a_diag3():
    return tb.diagonalize(np.diag([1.0, 2.0, 5.0]), role=tb.GENERATOR_ROLE)


@pytest.fixture(scope="session")
def zero_family():
    return tb.make_scalar_family("power", 1.0, c=0.0, beta=0.5)


@pytest.fixture(scope="session")
def linear_family():
    return tb.make_scalar_family("linear", 1.0)


@pytest.fixture(scope="session")
def sqrt_family():
    return tb.make_scalar_family("power", 1.0, c=1.0, beta=0.5)


@pytest.fixture(scope="session")
def weier_family():
    return tb.make_scalar_family("weierstrass", 1.0, c=1.0, beta=0.5, terms=12)


@pytest.fixture(scope="session")
def synth_pair(a_diag3):
    b0 = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]])
    b1 = np.diag([0.5, 1.0, 0.2])
    family = tb.make_synthetic_matrix_family(np.zeros((3, 3)) + b1, b0, "linear", 1.0)
    return a_diag3, family


@pytest.fixture(scope="session")
def const_matrix_pair(a_diag3):
    # constant (but non-commuting with A) family: modulation amplitude zero
    b0 = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]])
    family = tb.make_synthetic_matrix_family(b0, np.eye(3), "power", 1.0, c=0.0)
    return a_diag3, family


@pytest.fixture(scope="session")
def heat_pair():
    return tb.make_heat1d_family(
        8, tb.sin_squared_potential, 1.0, "weierstrass", c=1.0, beta=0.5, terms=12,
        declared_alpha=0.75,
    )


@pytest.fixture(scope="session")
def heat_lin_pair():
    return tb.make_heat1d_family(8, tb.sin_squared_potential, 1.0, "linear", c=1.0)
