import math

import numpy as np
import pytest

from hanging_surfaces.dirichlet import GridFunction, harmonic_extension
from hanging_surfaces.errors import InvalidParameterError
from hanging_surfaces.variational import (ConeAnnulusSurface, cone_annulus_surface,
                                          cone_family_centroid, first_variation,
                                          functional_J, perturbation_battery,
                                          sweep_cone_family, write_cone_sweep_csv)


def unit_square_grid(values):
    n = values.shape[0]
    return GridFunction(n, n, 1.0 / (n - 1), values)


class TestFunctional:
    def test_flat_unit_height(self):
        g = unit_square_grid(np.ones((33, 33)))
        assert functional_J(g, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_flat_with_multiplier(self):
        g = unit_square_grid(np.ones((33, 33)))
        assert functional_J(g, 2.0) == pytest.approx(3.0, abs=1e-14)

    def test_catenary_cylinder_closed_form(self):
        # integral of cosh^2 over [-1,1] x [0,1] = 1 + sinh(2)/2
        ref = 1.0 + math.sinh(2.0) / 2.0
        errs = []
        for n in (33, 65):
            h = 2.0 / (n - 1)
            ny = (n - 1) // 2 + 1
            x = -1.0 + h * np.arange(n)
            vals = np.cosh(x)[:, None] * np.ones((1, ny))
            g = GridFunction(n, ny, h, vals, x0=-1.0, y0=0.0)
            errs.append(abs(functional_J(g, 0.0) - ref))
        assert errs[0] < 2e-3
        # trapezoid + one-sided ring stencils stay second order
        assert 3.0 < errs[0] / errs[1] < 5.0

    def test_inversion_identity(self, cosh_solution_65):
        grid, _ = cosh_solution_65
        z0 = 3.0
        inverted = GridFunction(grid.nx, grid.ny, grid.h, 2 * z0 - grid.values,
                                grid.x0, grid.y0)
        # gradient magnitudes match, so J(u,1) - J(u,0) is the quadrature area
        area_q = functional_J(grid, 1.0) - functional_J(grid, 0.0)
        lhs = functional_J(inverted, 0.0)
        rhs = 2 * z0 * area_q - functional_J(grid, 0.0)
        assert lhs == pytest.approx(rhs, rel=1e-13)


class TestFirstVariation:
    def test_zero_perturbation_is_exactly_zero(self, cosh_solution_65):
        grid, _ = cosh_solution_65
        assert first_variation(grid, np.zeros_like(grid.values)) == 0.0

    def test_boundary_supported_perturbation_rejected(self, cosh_solution_65):
        grid, _ = cosh_solution_65
        pert = np.ones_like(grid.values)
        with pytest.raises(InvalidParameterError):
            first_variation(grid, pert)

    def test_solution_is_critical_nonsolution_is_not(self, cosh_solution_65):
        grid, report = cosh_solution_65
        assert report.converged
        full = np.cosh(grid.x)[:, None] * np.ones((1, grid.ny))
        bad = GridFunction(grid.nx, grid.ny, grid.h,
                           harmonic_extension(full, grid.h), grid.x0, grid.y0)
        worst_sol, worst_bad = 0.0, 0.0
        for _, pert in perturbation_battery(grid.nx, grid.ny):
            nrm = float(np.sqrt((pert**2).sum()) * grid.h)
            worst_sol = max(worst_sol, abs(first_variation(grid, pert)) / nrm)
            worst_bad = max(worst_bad, abs(first_variation(bad, pert)) / nrm)
        # 65^2 grid: the discretization mismatch scales like h^2 ~ 1e-3
        assert worst_sol < 1e-3, worst_sol
        assert worst_bad > 10 * worst_sol
        assert worst_bad > 0.1


class TestBattery:
    def test_composition(self):
        battery = perturbation_battery(33, 33)
        assert len(battery) == 16
        names = [name for name, _ in battery]
        assert len(set(names)) == 16
        assert sum(name.startswith("random") for name in names) == 8

    def test_fields_normalized_and_boundary_free(self):
        for name, f in perturbation_battery(17, 21):
            assert f.shape == (17, 21)
            assert np.abs(f).max() == pytest.approx(1.0)
            assert np.all(f[0, :] == 0) and np.all(f[-1, :] == 0)
            assert np.all(f[:, 0] == 0) and np.all(f[:, -1] == 0)

    def test_deterministic(self):
        a = perturbation_battery(17, 17)
        b = perturbation_battery(17, 17)
        for (na, fa), (nb, fb) in zip(a, b):
            assert na == nb
            assert np.array_equal(fa, fb)


class TestConeFamily:
    def test_closed_form_reference_values(self):
        r05 = cone_family_centroid(0.5)
        assert r05.cg_closed == pytest.approx(-0.51031, abs=1e-4)
        r01 = cone_family_centroid(0.1)
        assert r01.cg_closed == pytest.approx(-1.7001, abs=1e-4)

    def test_area_constant_two_pi(self):
        for R in (0.5, 0.2, 0.05):
            surf = cone_annulus_surface(R)
            assert surf.total_area == pytest.approx(2 * math.pi, rel=1e-12)
            assert surf.cone_lateral_area == pytest.approx(
                math.pi * R * math.hypot(surf.depth, R), rel=1e-12)

    def test_mesh_cross_validates_closed_form(self):
        rep = cone_family_centroid(0.1, n_r=48, n_theta=128)
        assert rep.area_mesh == pytest.approx(2 * math.pi, rel=2e-3)
        assert rep.cg_mesh == pytest.approx(rep.cg_closed, rel=2e-3)

    def test_closed_form_matches_centroid_composition(self):
        # the formula is -(depth/3) * cone_area / total_area
        surf = cone_annulus_surface(0.37)
        direct = -(1 + 0.37**2) / 6.0 * math.sqrt(2 + 1 / 0.37**2)
        assert surf.centroid_height == pytest.approx(direct, rel=1e-12)

    def test_sweep_strictly_decreasing_and_unbounded(self):
        reports = sweep_cone_family([0.5, 0.2, 0.1, 0.05, 0.01])
        cg = [rep.cg_closed for rep in reports]
        assert all(b < a for a, b in zip(cg, cg[1:]))
        assert min(cg) < -5.0

    def test_sweep_csv(self, tmp_path):
        reports = sweep_cone_family([0.5, 0.1], n_r=16, n_theta=32)
        path = tmp_path / "sweep.csv"
        write_cone_sweep_csv(reports, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("R,depth,area_closed")
        assert len(lines) == 3

    def test_invalid_radius(self):
        with pytest.raises(InvalidParameterError):
            cone_family_centroid(0.0)
        with pytest.raises(InvalidParameterError):
            ConeAnnulusSurface(1.2, 3.0)
