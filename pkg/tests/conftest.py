import numpy as np
import pytest

from diracsusy import Constants, Couplings, catalog, oracle


@pytest.fixture(scope="session")
def linear_scalar():
    """Pure scalar linear problem (a=1, natural units)."""
    return catalog.LinearProblem(1.0, Couplings(zeta1=1.0), Constants())


@pytest.fixture(scope="session")
def linear_mixed():
    """Scalar-electric linear problem with ell = 0.5."""
    return catalog.LinearProblem(1.0, Couplings(zeta1=1.0, zeta3=0.5), Constants())


@pytest.fixture(scope="session")
def inverse_scalar():
    """Pure scalar inverse-linear problem (q=1)."""
    return catalog.InverseLinearProblem(1.0, Couplings(zeta1=1.0), Constants())


@pytest.fixture(scope="session")
def inverse_mixed():
    """Scalar-electric inverse-linear problem (q=1, ell=0.5)."""
    return catalog.InverseLinearProblem(1.0, Couplings(zeta1=1.0, zeta3=0.5),
                                        Constants())


@pytest.fixture(scope="session")
def landau_massless():
    """Crossed-field problem with m ~ 0, k = 0, eB = 1 (graphene-like)."""
    return catalog.CrossedFieldProblem(B=1.0, constants=Constants(m=1e-12))


@pytest.fixture(scope="session")
def landau_collapsed():
    """Crossed-field problem with nu = 0.5."""
    return catalog.CrossedFieldProblem(B=1.0, Efield=0.5,
                                       constants=Constants(m=1e-12))


@pytest.fixture(scope="session")
def linear_scalar_oracle(linear_scalar):
    """Eigenvalues of the default-grid staggered matrix for the linear problem."""
    grid = linear_scalar.default_grid(5)
    ham = oracle.build_hamiltonian(linear_scalar.system(),
                                   linear_scalar.constants, grid)
    return oracle.eigenvalues(ham, (-4.0, 4.0)), grid


def nearest(values, target):
    values = np.asarray(values, dtype=float)
    return float(values[np.argmin(np.abs(values - target))])


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def count_nodes(psi, threshold=1e-8):
    psi = np.asarray(psi, dtype=float)
    mask = np.abs(psi) > threshold * np.max(np.abs(psi))
    sgn = np.sign(psi[mask])
    return int(np.sum(sgn[1:] != sgn[:-1]))
