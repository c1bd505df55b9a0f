import numpy as np
import pytest

from hanging_surfaces import catenary, dirichlet, profile_ode


@pytest.fixture(scope="session")
def axis_profile_u1():
    """Axis-started profile u(0) = 1 out to r = 2 at default tolerances."""
    return profile_ode.integrate_from_axis(1.0, 2.0)


@pytest.fixture(scope="session")
def two_cat_u1():
    """Default-margin 2-catenary with u_min = 1, dense sampling."""
    return catenary.two_catenary_build(1.0, n_samples=2001)


def solve_cosh(n):
    """Catenary-cylinder Dirichlet solve on [-1,1]^2 with an n x n grid."""
    h = 2.0 / (n - 1)
    grid, report = dirichlet.solve(lambda X, Y: np.cosh(X), n, n, h,
                                   x0=-1.0, y0=-1.0)
    return grid, report


@pytest.fixture(scope="session")
def cosh_solution_65():
    return solve_cosh(65)


@pytest.fixture(scope="session")
def cosh_solution_257():
    """Desk-scale catenary-cylinder solution shared by the acceptance
    property and first-variation gates."""
    return solve_cosh(257)
