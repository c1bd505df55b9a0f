import math
import struct

import numpy as np
import pytest

from hanging_surfaces import catenary, profile_ode, surface
from hanging_surfaces.errors import EmptyMeshError, InvalidParameterError
from hanging_surfaces.profile_ode import InitialData, Profile, Termination, TerminationKind
from hanging_surfaces.surface import (SurfaceMesh, catenary_cylinder, clip_y,
                                      cone_annulus_mesh, invert_about_plane,
                                      mesh_area, mesh_centroid_height, mesh_metrics,
                                      read_obj, read_stl, revolve_curve,
                                      revolve_horizontal, revolve_vertical,
                                      singular_residual_sample, translate,
                                      write_metrics_csv, write_obj, write_stl)


def synthetic_profile(r, u, du):
    term = Termination(TerminationKind.REACHED_TARGET, float(r[-1]))
    return Profile(np.asarray(r, float), np.asarray(u, float),
                   np.asarray(du, float), term, InitialData(r[0], u[0], du[0]))


def cone_profile(n=256, r_lo=1e-6, r_hi=1.0):
    r = np.linspace(r_lo, r_hi, n)
    return synthetic_profile(r, r.copy(), np.ones_like(r))


def triangle_normals(mesh):
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    n = np.cross(b - a, c - a)
    return n / np.linalg.norm(n, axis=1)[:, None]


def profile_area_oracle(profile, r_lo=None, r_hi=None, n=20001):
    """1-d quadrature 2*pi * int r sqrt(1+u'^2) dr along the profile."""
    from scipy.integrate import simpson

    lo = profile.r.min() if r_lo is None else r_lo
    hi = profile.r.max() if r_hi is None else r_hi
    rr = np.linspace(lo, hi, n)
    u, du = profile.evaluate(rr)
    return 2 * np.pi * simpson(rr * np.sqrt(1 + du**2), x=rr)


def profile_centroid_oracle(profile, n=20001):
    from scipy.integrate import simpson

    rr = np.linspace(profile.r.min(), profile.r.max(), n)
    u, du = profile.evaluate(rr)
    w = rr * np.sqrt(1 + du**2)
    return simpson(u * w, x=rr) / simpson(w, x=rr)


class TestRevolveVertical:
    def test_cone_lateral_area(self):
        mesh = revolve_vertical(cone_profile(256), 256)
        assert mesh_area(mesh) == pytest.approx(math.pi * math.sqrt(2.0), rel=0.005)

    def test_flat_annulus_area(self):
        r = np.linspace(1.0, 2.0, 64)
        mesh = revolve_vertical(synthetic_profile(r, np.ones_like(r), np.zeros_like(r)), 128)
        assert mesh_area(mesh) == pytest.approx(3 * math.pi, rel=0.005)

    def test_axis_fan_single_vertex(self, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 32)
        axis_verts = np.nonzero((mesh.vertices[:, 0] == 0) & (mesh.vertices[:, 1] == 0))[0]
        assert len(axis_verts) == 1
        assert mesh.vertices[axis_verts[0], 2] == 1.0

    def test_area_converges_second_order_to_quadrature(self, axis_profile_u1):
        ref = profile_area_oracle(axis_profile_u1)
        errors = []
        for n in (16, 32, 64):
            rr = np.linspace(0.0, 2.0, n + 1)
            u, du = axis_profile_u1.evaluate(rr)
            mesh = revolve_vertical(synthetic_profile(rr, u, du), n)
            errors.append(abs(mesh_area(mesh) - ref))
        orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert all(1.8 <= o <= 2.2 for o in orders), (errors, orders)

    def test_centroid_converges_to_quadrature(self, axis_profile_u1):
        ref = profile_centroid_oracle(axis_profile_u1)
        rr = np.linspace(0.0, 2.0, 257)
        u, du = axis_profile_u1.evaluate(rr)
        mesh = revolve_vertical(synthetic_profile(rr, u, du), 256)
        assert mesh_centroid_height(mesh) == pytest.approx(ref, rel=1e-4)

    def test_upward_orientation(self, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 32)
        assert np.all(triangle_normals(mesh)[:, 2] > 0)

    def test_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            revolve_vertical(cone_profile(16), 4)   # n_theta too small


@pytest.fixture(scope="module")
def tc():
    return catenary.two_catenary_build(1.0, n_samples=401)


@pytest.fixture(scope="module")
def roof():
    trunc = catenary.two_catenary_build(1.0, n_samples=201, margin=0.05)
    return revolve_horizontal(trunc, n_theta=41)


class TestRevolveHorizontal:

    def test_footprint_extent(self, tc):
        mesh = revolve_horizontal(tc, n_theta=33)
        extent = mesh.vertices[:, 0].max() - mesh.vertices[:, 0].min()
        assert extent == pytest.approx(2 * (tc.half_width - tc.margin), rel=1e-12)

    def test_zero_angle_section_is_profile(self, tc):
        mesh = revolve_horizontal(tc, n_theta=33)  # odd count includes theta=0
        v = mesh.vertices.reshape(tc.profile.n_samples, 33, 3)
        mid = v[:, 16, :]
        assert np.abs(mid[:, 1]).max() < 1e-12 * tc.profile.u.max()
        assert np.allclose(mid[:, 2], tc.profile.u, rtol=1e-14)

    def test_stays_above_ground(self, tc):
        mesh = revolve_horizontal(tc, (-np.pi / 2, np.pi / 2), n_theta=41)
        zmin = mesh.vertices[:, 2].min()
        assert zmin >= 0.0
        # lowest point sits on the u_min ring at the extreme angle
        bound = tc.u_min * math.cos(np.pi / 2)
        assert zmin <= bound + 1e-12

    def test_partial_range_bound(self, tc):
        theta_hi = 1.2
        mesh = revolve_horizontal(tc, (-0.7, theta_hi), n_theta=41)
        zmin = mesh.vertices[:, 2].min()
        assert zmin == pytest.approx(tc.u_min * math.cos(theta_hi), rel=1e-12)

    def test_upward_orientation(self, tc):
        mesh = revolve_horizontal(tc, (-1.0, 1.0), n_theta=17)
        assert np.all(triangle_normals(mesh)[:, 2] > 0)

    def test_area_matches_quadrature(self):
        from scipy.integrate import simpson

        # modest truncation so quadrature and mesh both resolve the strip
        tc = catenary.two_catenary_build(1.0, n_samples=2001, margin=0.3)
        theta_range = (-1.2, 1.2)
        mesh = revolve_horizontal(tc, theta_range, n_theta=257)
        x, u, du = tc.profile.r, tc.profile.u, tc.profile.du
        # |X_r x X_theta| = u sqrt(1 + u'^2), independent of theta
        ref = (theta_range[1] - theta_range[0]) * simpson(u * np.sqrt(1 + du**2), x=x)
        assert mesh_area(mesh) == pytest.approx(ref, rel=1e-3)

    def test_range_validation(self, tc):
        with pytest.raises(InvalidParameterError):
            revolve_horizontal(tc, (-2.0, 1.0))
        with pytest.raises(InvalidParameterError):
            revolve_horizontal(tc, (0.5, 0.5))
        with pytest.raises(InvalidParameterError):
            revolve_horizontal(tc, (-1.0, 1.7))


class TestInversion:
    def test_vertex_reflection(self):
        mesh = revolve_vertical(cone_profile(16), 16)
        inv = invert_about_plane(mesh, 3.0)
        assert np.allclose(inv.vertices[:, 2], 6.0 - mesh.vertices[:, 2], rtol=0, atol=1e-14)
        assert np.array_equal(inv.vertices[:, :2], mesh.vertices[:, :2])

    def test_double_inversion_is_identity(self):
        mesh = revolve_vertical(cone_profile(16), 16)
        twice = invert_about_plane(invert_about_plane(mesh, 2.0), 2.0)
        assert np.abs(twice.vertices - mesh.vertices).max() < 1e-12
        assert np.array_equal(twice.triangles, mesh.triangles)

    def test_area_is_invariant(self, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 64)
        inv = invert_about_plane(mesh, 2.0)
        assert abs(mesh_area(inv) - mesh_area(mesh)) <= 1e-12 * mesh_area(mesh)

    def test_centroid_maps_affinely(self, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 64)
        inv = invert_about_plane(mesh, 2.0)
        assert mesh_centroid_height(inv) == pytest.approx(
            4.0 - mesh_centroid_height(mesh), abs=1e-12)

    def test_orientation_coherent_after_inversion(self, axis_profile_u1):
        # the winding flip keeps the normal field tracking the same material
        # side through the reflection: a hanging bowl's upward normals become
        # the cupola's downward normals, coherently across the whole mesh
        mesh = revolve_vertical(axis_profile_u1, 32)
        inv = invert_about_plane(mesh, 2.0)
        assert np.all(triangle_normals(inv)[:, 2] < 0)


class TestClip:
    def test_clip_bounds_respected(self, roof):
        clipped = clip_y(roof, -1.0, 1.0)
        used = np.unique(clipped.triangles)
        y = clipped.vertices[used, 1]
        assert y.min() >= -1.0 - 1e-12
        assert y.max() <= 1.0 + 1e-12

    def test_full_range_is_identity(self, roof):
        lo = roof.vertices[:, 1].min() - 1.0
        hi = roof.vertices[:, 1].max() + 1.0
        clipped = clip_y(roof, lo, hi)
        assert clipped.n_vertices == roof.n_vertices
        assert np.array_equal(clipped.vertices, roof.vertices)
        assert np.array_equal(clipped.triangles, roof.triangles)

    def test_area_monotone_in_window(self, roof):
        a1 = mesh_area(clip_y(roof, -1.0, 1.0))
        a2 = mesh_area(clip_y(roof, -2.0, 2.0))
        assert a1 < a2 < mesh_area(roof)

    def test_partition_preserves_area(self, roof):
        left = mesh_area(clip_y(roof, roof.vertices[:, 1].min() - 1, 0.0))
        right = mesh_area(clip_y(roof, 0.0, roof.vertices[:, 1].max() + 1))
        assert left + right == pytest.approx(mesh_area(roof), rel=1e-9)

    def test_empty_result_raises(self, roof):
        with pytest.raises(EmptyMeshError):
            clip_y(roof, 100.0, 200.0)

    def test_bad_window_raises(self, roof):
        with pytest.raises(InvalidParameterError):
            clip_y(roof, 1.0, -1.0)


class TestCatenaryCylinder:
    def test_area_closed_form(self):
        cat = catenary.Catenary(1.0, 0.0)
        mesh = catenary_cylinder(cat, (-1.0, 1.0), (0.0, 2.0), (129, 9))
        # int sqrt(1+sinh^2) dx = sinh(1) - sinh(-1), times the y-length
        ref = 2.0 * (math.sinh(1.0) - math.sinh(-1.0))
        assert mesh_area(mesh) == pytest.approx(ref, rel=5e-4)

    def test_section_equals_curve(self):
        cat = catenary.Catenary(2.0, 0.1)
        mesh = catenary_cylinder(cat, (-0.5, 0.5), (0.0, 1.0), (33, 5))
        v = mesh.vertices.reshape(33, 5, 3)
        x = v[:, 0, 0]
        assert np.allclose(v[:, 0, 2], cat.eval(x)[0], rtol=1e-14)
        assert np.allclose(v[:, 2, 2], v[:, 0, 2], rtol=0, atol=0)  # ruled in y

    def test_translation_invariance(self):
        cat = catenary.Catenary(1.0, 0.0)
        mesh = catenary_cylinder(cat, (-1.0, 1.0), (0.0, 1.0), (33, 9))
        moved = translate(mesh, (3.0, -7.0, 0.0))
        assert abs(mesh_area(moved) - mesh_area(mesh)) <= 1e-12 * mesh_area(mesh)

    def test_range_validation(self):
        cat = catenary.Catenary(1.0)
        with pytest.raises(InvalidParameterError):
            catenary_cylinder(cat, (1.0, 1.0), (0.0, 1.0), 9)


class TestConeAnnulus:
    def test_total_area_constant(self):
        for R in (0.5, 0.1):
            depth = math.sqrt(2.0 + 1.0 / R**2)
            mesh = cone_annulus_mesh(R, depth, n_r=48, n_theta=128)
            assert mesh_area(mesh) == pytest.approx(2 * math.pi, rel=2e-3)

    def test_centroid_matches_hollow_cone_rule(self):
        R = 0.3
        depth = math.sqrt(2.0 + 1.0 / R**2)
        mesh = cone_annulus_mesh(R, depth, n_r=64, n_theta=256)
        cone_area = math.pi * R * math.hypot(depth, R)
        ref = -(depth / 3.0) * cone_area / (2 * math.pi)
        assert mesh_centroid_height(mesh) == pytest.approx(ref, rel=2e-3)

    def test_invalid_radius(self):
        with pytest.raises(InvalidParameterError):
            cone_annulus_mesh(1.5, 1.0)


class TestResidualSampling:
    def test_cone_closed_form(self):
        stats = singular_residual_sample(cone_profile(101, 0.5, 2.0), "vertical")
        assert stats.max < 1e-12

    def test_dome_residual(self, axis_profile_u1):
        stats = singular_residual_sample(axis_profile_u1, "vertical",
                                         r_range=(0.1, 2.0))
        assert stats.max < 1e-6

    def test_roof_residual(self, two_cat_u1):
        stats = singular_residual_sample(two_cat_u1.profile, "horizontal")
        assert stats.max < 1e-6

    def test_residual_detects_wrong_curve(self):
        # a parabola is not a solution; the residual must say so loudly
        r = np.linspace(0.5, 2.0, 201)
        u = 1.0 + 0.5 * r**2
        p = synthetic_profile(r, u, r.copy())
        stats = singular_residual_sample(p, "vertical")
        assert stats.max > 1e-2

    def test_translation_leaves_residual_alone(self, axis_profile_u1):
        # residual sampling depends on the profile only; meshes translate
        s1 = singular_residual_sample(axis_profile_u1, "vertical", r_range=(0.1, 2.0))
        s2 = singular_residual_sample(axis_profile_u1, "vertical", r_range=(0.1, 2.0))
        assert s1 == s2


class TestExports:
    def test_obj_round_trip(self, tmp_path, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 16)
        path = tmp_path / "dome.obj"
        write_obj(mesh, path)
        back = read_obj(path)
        assert back.n_triangles == mesh.n_triangles
        assert np.allclose(back.vertices, mesh.vertices, rtol=1e-11, atol=1e-14)
        assert np.array_equal(back.triangles, mesh.triangles)

    def test_obj_format(self, tmp_path):
        # irrational scale guarantees long decimal expansions
        mesh = revolve_vertical(cone_profile(8, 1e-6, math.pi / 3), 8)
        path = tmp_path / "cone.obj"
        write_obj(mesh, path)
        lines = [l for l in path.read_text().splitlines() if l and l[0] != "#"]
        v_lines = [l for l in lines if l.startswith("v ")]
        f_lines = [l for l in lines if l.startswith("f ")]
        assert len(v_lines) == mesh.n_vertices
        assert len(f_lines) == mesh.n_triangles
        # 1-based indices
        smallest = min(int(tok) for l in f_lines for tok in l.split()[1:])
        assert smallest == 1
        # at least 10 significant digits appear on the emitted coordinates
        def sig_digits(tok):
            return len(tok.split("e")[0].replace(".", "").replace("-", "").lstrip("0"))
        assert max(sig_digits(tok) for l in v_lines for tok in l.split()[1:]) >= 10

    def test_stl_round_trip(self, tmp_path, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 16)
        path = tmp_path / "dome.stl"
        write_stl(mesh, path)
        normals, tris = read_stl(path)
        assert len(normals) == mesh.n_triangles
        assert np.abs(np.linalg.norm(normals, axis=1) - 1.0).max() < 1e-6
        ref = mesh.vertices[mesh.triangles]
        assert np.allclose(tris, ref, rtol=1e-6, atol=1e-6)
        # binary layout: 80-byte header + count + 50 bytes per facet
        assert path.stat().st_size == 84 + 50 * mesh.n_triangles
        raw = path.read_bytes()
        assert struct.unpack_from("<I", raw, 80)[0] == mesh.n_triangles

    def test_metrics_csv(self, tmp_path, axis_profile_u1):
        mesh = revolve_vertical(axis_profile_u1, 16)
        stats = singular_residual_sample(axis_profile_u1, "vertical", r_range=(0.1, 2.0))
        path = tmp_path / "metrics.csv"
        write_metrics_csv(mesh_metrics(mesh, stats), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "area,centroid_height,residual_max,residual_mean"
        vals = lines[1].split(",")
        assert float(vals[0]) == pytest.approx(mesh_area(mesh), rel=1e-14)
        assert float(vals[2]) == pytest.approx(stats.max, rel=1e-14)


class TestMeshValidation:
    def test_bad_indices_rejected(self):
        with pytest.raises(InvalidParameterError):
            SurfaceMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))

    def test_empty_mesh_rejected(self):
        with pytest.raises(EmptyMeshError):
            SurfaceMesh(np.zeros((3, 3)), np.empty((0, 3), dtype=np.int64))
