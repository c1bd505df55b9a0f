"""Triangle meshes for hanging surfaces: revolution, inversion, clipping.

Constructions
-------------
* revolve_vertical / revolve_curve: surface of revolution about the
  vertical axis, X(r, theta) = (r cos theta, r sin theta, u(r)), with a
  single fan vertex when the profile starts on the axis.
* revolve_horizontal: surface of revolution about the horizontal x-axis,
  X(x, theta) = (x, -u sin theta, u cos theta), restricted to
  theta in [-pi/2, pi/2] so the sheet stays above the ground plane.
* catenary_cylinder: ruled surface z = u(x) swept along y.
* cone_annulus_mesh: flat unit annulus plus a hanging cone of given
  depth (the constant-area family whose center of gravity is unbounded
  below).

invert_about_plane reflects across z = z0 (turning a hanging shape into
a dome/roof) and flips winding to keep normals outward; clip_y cuts the
mesh between two vertical planes, splitting straddling triangles.

Quad patches are triangulated along their shorter diagonal to avoid
slivers near the axis fan.  Winding is chosen so triangle normals have
positive z-component (upward) before any inversion.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .catenary import TwoCatenary
from .errors import EmptyMeshError, InvalidParameterError, SingularInputError
from .profile_ode import Profile

__all__ = [
    "SurfaceMesh",
    "MeshMetrics",
    "ResidualStats",
    "revolve_curve",
    "revolve_vertical",
    "revolve_horizontal",
    "catenary_cylinder",
    "cone_annulus_mesh",
    "invert_about_plane",
    "clip_y",
    "translate",
    "mesh_area",
    "mesh_centroid_height",
    "mesh_metrics",
    "singular_residual_sample",
    "write_obj",
    "read_obj",
    "write_stl",
    "read_stl",
    "write_metrics_csv",
]


@dataclass(frozen=True)
class SurfaceMesh:
    """Indexed triangle mesh with construction provenance."""

    vertices: np.ndarray            # (n, 3) float
    triangles: np.ndarray           # (m, 3) int, consistent winding
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidParameterError("vertices must be (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise InvalidParameterError("triangles must be (m, 3)")
        if len(t) == 0:
            raise EmptyMeshError("mesh has no triangles")
        if t.min() < 0 or t.max() >= len(v):
            raise InvalidParameterError("triangle index out of range")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True)
class ResidualStats:
    max: float
    mean: float
    n_samples: int


@dataclass(frozen=True)
class MeshMetrics:
    """Area, area-weighted centroid height, and optional residual stats."""

    area: float
    centroid_height: float
    residual_stats: ResidualStats | None = None


def mesh_area(mesh: SurfaceMesh) -> float:
    return float(mesh.triangle_areas().sum())


def mesh_centroid_height(mesh: SurfaceMesh) -> float:
    """Area-weighted mean of triangle-centroid heights."""
    areas = mesh.triangle_areas()
    zc = mesh.vertices[mesh.triangles, 2].mean(axis=1)
    return float((areas * zc).sum() / areas.sum())


def mesh_metrics(mesh: SurfaceMesh, residual_stats: ResidualStats | None = None) -> MeshMetrics:
    return MeshMetrics(mesh_area(mesh), mesh_centroid_height(mesh), residual_stats)


def _quad_triangles(idx_a, idx_b, idx_c, idx_d, vertices):
    """Split quads (a, b, c, d) along their shorter diagonal.

    Corners are ordered so that (a, b, c) keeps the construction's
    winding.  Returns an (m, 3) index array.
    """
    va, vb, vc, vd = (vertices[i] for i in (idx_a, idx_b, idx_c, idx_d))
    diag_ac = np.linalg.norm(vc - va, axis=1)
    diag_bd = np.linalg.norm(vd - vb, axis=1)
    use_ac = diag_ac <= diag_bd
    tris = np.empty((len(idx_a) * 2, 3), dtype=np.int64)
    tris[0::2] = np.where(use_ac[:, None],
                          np.stack([idx_a, idx_b, idx_c], axis=1),
                          np.stack([idx_a, idx_b, idx_d], axis=1))
    tris[1::2] = np.where(use_ac[:, None],
                          np.stack([idx_a, idx_c, idx_d], axis=1),
                          np.stack([idx_b, idx_c, idx_d], axis=1))
    return tris


def revolve_curve(r, z, n_theta: int, provenance: dict | None = None) -> SurfaceMesh:
    """Revolve a planar curve (r_i, z_i) about the vertical axis.

    r must be non-negative and strictly increasing; if r[0] == 0 the axis
    point becomes a single fan vertex.  No sign constraint on z (used for
    hanging cones as well as graphs above the plane).
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    if r.ndim != 1 or r.shape != z.shape or len(r) < 2:
        raise InvalidParameterError("need matching 1-d arrays with >= 2 points")
    if np.any(np.diff(r) <= 0) or r[0] < 0:
        raise InvalidParameterError("radii must be non-negative and strictly increasing")
    if n_theta < 8:
        raise InvalidParameterError(f"n_theta must be >= 8, got {n_theta}")

    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    fan = r[0] == 0.0
    ring_r = r[1:] if fan else r
    ring_z = z[1:] if fan else z

    rings = np.empty((len(ring_r), n_theta, 3))
    rings[:, :, 0] = ring_r[:, None] * cos_t[None, :]
    rings[:, :, 1] = ring_r[:, None] * sin_t[None, :]
    rings[:, :, 2] = ring_z[:, None]
    verts = rings.reshape(-1, 3)
    offset = 0
    if fan:
        verts = np.vstack([[0.0, 0.0, z[0]], verts])
        offset = 1

    def vid(i, j):
        return offset + i * n_theta + j % n_theta

    tri_blocks = []
    jj = np.arange(n_theta)
    if fan:
        # apex fan keeps (increasing r, increasing theta) winding: upward
        tri_blocks.append(np.stack(
            [np.zeros(n_theta, dtype=np.int64), vid(0, jj), vid(0, jj + 1)], axis=1))
    for i in range(len(ring_r) - 1):
        a = vid(i, jj)
        b = vid(i + 1, jj)
        c = vid(i + 1, jj + 1)
        d = vid(i, jj + 1)
        tri_blocks.append(_quad_triangles(a, b, c, d, verts))
    tris = np.vstack(tri_blocks)
    prov = provenance or {"kind": "revolve_curve"}
    prov = {**prov, "n_theta": n_theta, "axis": "vertical"}
    return SurfaceMesh(verts, tris, prov)


def revolve_vertical(profile: Profile, n_theta: int) -> SurfaceMesh:
    """Revolve a positive-height profile about the vertical axis."""
    if profile.n_samples < 2:
        raise InvalidParameterError("profile too short to revolve")
    if profile.ascending:
        r, u = profile.r, profile.u
    else:
        r, u = profile.r[::-1], profile.u[::-1]
    prov = {
        "kind": "revolve_vertical",
        "params": {"r0": profile.params.r0, "u0": profile.params.u0,
                   "du0": profile.params.du0},
        "termination": profile.termination.kind.value,
    }
    return revolve_curve(r, u, n_theta, prov)


def revolve_horizontal(two_cat: TwoCatenary, theta_range=(-np.pi / 2, np.pi / 2),
                       n_theta: int = 65) -> SurfaceMesh:
    """Rotate the 2-catenary about the horizontal x-axis.

    X(x, theta) = (x, -u sin theta, u cos theta) over the clamped angular
    range inside [-pi/2, pi/2]; outside that range the sheet would dip
    below the ground plane z = 0.
    """
    lo, hi = float(theta_range[0]), float(theta_range[1])
    if not (-np.pi / 2 <= lo < hi <= np.pi / 2):
        raise InvalidParameterError(
            f"theta range must satisfy -pi/2 <= lo < hi <= pi/2, got ({lo}, {hi})")
    if n_theta < 2:
        raise InvalidParameterError("need at least 2 angular stations")
    x = two_cat.profile.r
    u = two_cat.profile.u
    theta = np.linspace(lo, hi, n_theta)
    verts = np.empty((len(x), n_theta, 3))
    verts[:, :, 0] = x[:, None]
    verts[:, :, 1] = -u[:, None] * np.sin(theta)[None, :]
    verts[:, :, 2] = u[:, None] * np.cos(theta)[None, :]
    verts = verts.reshape(-1, 3)

    def vid(i, j):
        return i * n_theta + j

    jj = np.arange(n_theta - 1)
    blocks = []
    for i in range(len(x) - 1):
        a = vid(i, jj)
        b = vid(i, jj + 1)          # theta-first ordering flips the normal
        c = vid(i + 1, jj + 1)      # of X_r x X_theta, which points down
        d = vid(i + 1, jj)
        blocks.append(_quad_triangles(a, b, c, d, verts))
    tris = np.vstack(blocks)
    prov = {"kind": "revolve_horizontal", "axis": "horizontal",
            "u_min": two_cat.u_min, "half_width": two_cat.half_width,
            "margin": two_cat.margin, "theta_range": [lo, hi],
            "n_theta": n_theta}
    return SurfaceMesh(verts, tris, prov)


def catenary_cylinder(cat, x_range, y_range, n) -> SurfaceMesh:
    """Ruled surface z = u(x) over a rectangle, rulings parallel to y."""
    x0, x1 = float(x_range[0]), float(x_range[1])
    y0, y1 = float(y_range[0]), float(y_range[1])
    if not (x1 > x0 and y1 > y0):
        raise InvalidParameterError("ranges must be nonempty")
    nx, ny = (n, n) if np.isscalar(n) else (int(n[0]), int(n[1]))
    if nx < 2 or ny < 2:
        raise InvalidParameterError("need at least a 2x2 vertex grid")
    x = np.linspace(x0, x1, nx)
    y = np.linspace(y0, y1, ny)
    u = cat.eval(x)[0]
    verts = np.empty((nx, ny, 3))
    verts[:, :, 0] = x[:, None]
    verts[:, :, 1] = y[None, :]
    verts[:, :, 2] = u[:, None]
    verts = verts.reshape(-1, 3)

    def vid(i, j):
        return i * ny + j

    jj = np.arange(ny - 1)
    blocks = []
    for i in range(nx - 1):
        a = vid(i, jj)
        b = vid(i + 1, jj)
        c = vid(i + 1, jj + 1)
        d = vid(i, jj + 1)
        blocks.append(_quad_triangles(a, b, c, d, verts))
    prov = {"kind": "catenary_cylinder", "a": cat.a, "b": cat.b,
            "x_range": [x0, x1], "y_range": [y0, y1]}
    return SurfaceMesh(verts, np.vstack(blocks), prov)


def cone_annulus_mesh(R: float, depth: float, n_r: int = 48, n_theta: int = 128) -> SurfaceMesh:
    """Unit-disk annulus (R <= r <= 1, z = 0) plus a cone hanging to
    z = -depth at the center."""
    if not 0 < R < 1:
        raise InvalidParameterError(f"R must lie in (0, 1), got {R}")
    if not depth > 0:
        raise InvalidParameterError("depth must be positive")
    n_cone = max(2, int(round(n_r * R / 1.0)) + 1)
    r_cone = np.linspace(0.0, R, n_cone)
    r_ann = np.linspace(R, 1.0, max(2, n_r - n_cone + 2))
    r = np.concatenate([r_cone, r_ann[1:]])
    z = np.where(r < R, -depth * (R - r) / R, 0.0)
    prov = {"kind": "cone_annulus", "R": R, "depth": depth}
    return revolve_curve(r, z, n_theta, prov)


def invert_about_plane(mesh: SurfaceMesh, z0: float) -> SurfaceMesh:
    """Reflect across the horizontal plane z = z0, flipping winding so the
    outward orientation is preserved."""
    verts = mesh.vertices.copy()
    verts[:, 2] = 2.0 * z0 - verts[:, 2]
    tris = mesh.triangles[:, [0, 2, 1]]
    prov = {**mesh.provenance, "inverted_about": float(z0)}
    return SurfaceMesh(verts, tris, prov)


def translate(mesh: SurfaceMesh, offset) -> SurfaceMesh:
    """Rigid translation (horizontal offsets leave all metrics unchanged)."""
    off = np.asarray(offset, dtype=float).reshape(3)
    return SurfaceMesh(mesh.vertices + off, mesh.triangles,
                       {**mesh.provenance, "translated_by": off.tolist()})


def _clip_halfplane(polys, signed_dist):
    """Sutherland-Hodgman step: keep the signed_dist >= 0 side.

    polys is a list of (k, 3) vertex loops; signed_dist maps points to
    distances (positive inside).  Crossing edges get interpolated
    vertices.
    """
    out = []
    for poly in polys:
        d = signed_dist(poly)
        if np.all(d >= 0):
            out.append(poly)
            continue
        if np.all(d < 0):
            continue
        kept = []
        k = len(poly)
        for i in range(k):
            j = (i + 1) % k
            pi, pj = poly[i], poly[j]
            di, dj = d[i], d[j]
            if di >= 0:
                kept.append(pi)
            if (di < 0) != (dj < 0):
                t = di / (di - dj)
                kept.append(pi + t * (pj - pi))
        if len(kept) >= 3:
            out.append(np.asarray(kept))
    return out


def clip_y(mesh: SurfaceMesh, y_min: float, y_max: float) -> SurfaceMesh:
    """Cut the mesh between the vertical planes y = y_min and y = y_max.

    Triangles wholly outside are dropped; straddling triangles are split
    along the plane with linearly interpolated vertices.  Raises
    EmptyMeshError when nothing remains.
    """
    if not y_min < y_max:
        raise InvalidParameterError(f"need y_min < y_max, got ({y_min}, {y_max})")
    v = mesh.vertices
    tri_y = v[mesh.triangles, 1]
    inside_min = tri_y >= y_min
    inside_max = tri_y <= y_max
    fully_in = inside_min.all(axis=1) & inside_max.all(axis=1)
    fully_out = (~inside_min).all(axis=1) | (~inside_max).all(axis=1)
    straddle = ~fully_in & ~fully_out

    new_tris = [mesh.triangles[fully_in]]
    extra_verts = []
    extra_tris = []
    base = len(v)
    for tri in mesh.triangles[straddle]:
        polys = [v[tri]]
        polys = _clip_halfplane(polys, lambda p: p[:, 1] - y_min)
        polys = _clip_halfplane(polys, lambda p: y_max - p[:, 1])
        for poly in polys:
            # drop degenerate outputs from edge-grazing cuts
            areas2 = np.linalg.norm(
                np.cross(poly[1:-1] - poly[0], poly[2:] - poly[0]), axis=1)
            if areas2.sum() < 1e-14:
                continue
            start = base + len(extra_verts)
            extra_verts.extend(poly)
            for k in range(1, len(poly) - 1):
                if areas2[k - 1] > 1e-14:
                    extra_tris.append([start, start + k, start + k + 1])
    if extra_tris:
        all_verts = np.vstack([v, np.asarray(extra_verts)])
        all_tris = np.vstack(new_tris + [np.asarray(extra_tris, dtype=np.int64)])
    else:
        all_verts = v
        all_tris = np.vstack(new_tris) if len(new_tris[0]) else np.empty((0, 3), np.int64)
    if len(all_tris) == 0:
        raise EmptyMeshError(f"no triangles remain after clipping to [{y_min}, {y_max}]")
    prov = {**mesh.provenance, "clipped_y": [float(y_min), float(y_max)]}
    return SurfaceMesh(all_verts, all_tris, prov)


def _tangent_angle_rate(r, du):
    """d/dr of the tangent angle phi = atan(u'), from samples alone.

    phi stays bounded through slope blow-ups, so differentiating it is
    well conditioned where differentiating u' itself is hopeless.  Sliding
    5-point windows with offsets normalized per window give O(h^4)
    accuracy on arbitrarily graded sample spacings; the returned rate
    equals u'' / (1 + u'^2).
    """
    n = len(r)
    if n < 5:
        raise InvalidParameterError("need >= 5 samples to differentiate slopes")
    phi = np.arctan(du)
    start = np.clip(np.arange(n) - 2, 0, n - 5)
    window = start[:, None] + np.arange(5)[None, :]
    d = r[window] - r[:, None]
    scale = np.abs(d).max(axis=1)
    dn = d / scale[:, None]
    # weights w solve sum_j w_j dn_j^k = delta_{k,1}; derivative = w/scale . phi
    A = dn[:, None, :] ** np.arange(5)[None, :, None]
    rhs = np.zeros((n, 5, 1))
    rhs[:, 1, 0] = 1.0
    w = np.linalg.solve(A, rhs)[:, :, 0]
    return np.einsum("ij,ij->i", w, phi[window]) / scale


def singular_residual_sample(profile: Profile, axis: str = "vertical",
                             n_theta: int = 16, r_range=None,
                             theta_range=(-np.pi / 2, np.pi / 2)) -> ResidualStats:
    """Pointwise residual of the coordinate-free shape condition
    H = <N, v> / <p, v> on the analytic surface carried by a profile.

    The left side (mean curvature as sum of the meridian and
    circumferential normal curvatures) is evaluated from the profile's
    heights and slopes, with the meridian curvature dphi/dr obtained by
    numerically differentiating the tangent angle of the sampled slopes;
    the right side is assembled from the actual 3-d points and normals of
    the parametrization at a grid of sample angles.  The two sides follow
    independent routes and agree only if the integrated profile genuinely
    solves the governing equation in the chosen frame.
    """
    if axis not in ("vertical", "horizontal"):
        raise InvalidParameterError("axis must be 'vertical' or 'horizontal'")
    if profile.ascending:
        r, u, du = profile.r, profile.u, profile.du
    else:
        r, u, du = profile.r[::-1], profile.u[::-1], profile.du[::-1]
    kappa = _tangent_angle_rate(r, du)   # u'' / (1 + u'^2)
    inner = slice(2, -2)  # one-sided windows at the ends trail in accuracy
    r, u, du, kappa = r[inner], u[inner], du[inner], kappa[inner]
    if r_range is not None:
        m = (r >= r_range[0]) & (r <= r_range[1])
        r, u, du, kappa = r[m], u[m], du[m], kappa[m]
    if len(r) == 0:
        raise InvalidParameterError("no samples in the requested range")
    v = np.array([0.0, 0.0, 1.0])
    w = np.sqrt(1.0 + du * du)

    if axis == "vertical":
        if np.any(r == 0):
            raise SingularInputError("vertical-axis residual undefined at r = 0")
        theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        h_analytic = kappa / w + du / (r * w)
        res = []
        for th in theta:
            ct, st = np.cos(th), np.sin(th)
            p = np.stack([r * ct, r * st, u], axis=1)
            x_r = np.stack([np.full_like(r, ct), np.full_like(r, st), du], axis=1)
            x_t = np.stack([-r * st, r * ct, np.zeros_like(r)], axis=1)
            nrm = np.cross(x_r, x_t)
            nrm /= np.linalg.norm(nrm, axis=1)[:, None]
            nrm *= np.sign(nrm[:, 2])[:, None]          # upward
            denom = p @ v
            if np.any(denom == 0):
                raise SingularInputError("sample point with <p, v> = 0")
            res.append(h_analytic - (nrm @ v) / denom)
        res = np.concatenate(res)
    else:
        lo, hi = theta_range
        theta = np.linspace(lo, hi, n_theta)
        # meridian curvature + circumferential curvature toward the axis
        h_analytic = kappa / w - 1.0 / (u * w)
        res = []
        for th in theta:
            ct, st = np.cos(th), np.sin(th)
            p = np.stack([r, -u * st, u * ct], axis=1)
            x_r = np.stack([np.ones_like(r), -du * st, du * ct], axis=1)
            x_t = np.stack([np.zeros_like(r), -u * ct, -u * st], axis=1)
            nrm = np.cross(x_r, x_t)
            nrm /= np.linalg.norm(nrm, axis=1)[:, None]
            flip = np.sign(nrm[:, 2])
            flip[flip == 0] = 1.0
            nrm *= flip[:, None]
            denom = p @ v
            if np.any(denom == 0):
                raise SingularInputError("sample point with <p, v> = 0")
            res.append(h_analytic - (nrm @ v) / denom)
        res = np.concatenate(res)
    return ResidualStats(max=float(np.abs(res).max()),
                         mean=float(np.abs(res).mean()),
                         n_samples=int(res.size))


def write_obj(mesh: SurfaceMesh, path) -> None:
    """ASCII OBJ: v lines then 1-based f lines, counterclockwise = outward,
    12 significant digits."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("# hanging-surfaces mesh export\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.12g} {y:.12g} {z:.12g}\n")
        for i, j, k in mesh.triangles + 1:
            fh.write(f"f {i} {j} {k}\n")


def read_obj(path) -> SurfaceMesh:
    verts, tris = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            tris.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return SurfaceMesh(np.asarray(verts), np.asarray(tris, dtype=np.int64),
                       {"kind": "obj_import", "path": str(path)})


def write_stl(mesh: SurfaceMesh, path) -> None:
    """Binary little-endian STL with per-facet normals recomputed from the
    winding."""
    path = Path(path)
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    n = np.cross(b - a, c - a)
    lens = np.linalg.norm(n, axis=1)
    lens[lens == 0] = 1.0
    n = n / lens[:, None]
    with open(path, "wb") as fh:
        fh.write(b"hanging-surfaces binary stl".ljust(80, b"\0"))
        fh.write(struct.pack("<I", len(mesh.triangles)))
        for i in range(len(mesh.triangles)):
            fh.write(struct.pack("<12f", *n[i], *a[i], *b[i], *c[i]))
            fh.write(struct.pack("<H", 0))


def read_stl(path):
    """Read a binary STL written by write_stl; returns (normals, vertices)
    arrays of shapes (m, 3) and (m, 3, 3)."""
    raw = Path(path).read_bytes()
    count = struct.unpack_from("<I", raw, 80)[0]
    normals = np.empty((count, 3))
    tris = np.empty((count, 3, 3))
    off = 84
    for i in range(count):
        vals = struct.unpack_from("<12f", raw, off)
        normals[i] = vals[0:3]
        tris[i] = np.asarray(vals[3:12]).reshape(3, 3)
        off += 50
    return normals, tris


def write_metrics_csv(metrics: MeshMetrics, path) -> None:
    path = Path(path)
    stats = metrics.residual_stats
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["area", "centroid_height", "residual_max", "residual_mean"])
        w.writerow([f"{metrics.area:.15g}", f"{metrics.centroid_height:.15g}",
                    "" if stats is None else f"{stats.max:.15g}",
                    "" if stats is None else f"{stats.mean:.15g}"])
