"""Hanging-surface energy, discrete first variation, and the unbounded
center-of-gravity cone family.

The energy of a graph u over its domain (with unit density and a
multiplier lambda on the area constraint) is

    J(u) = integral (u + lambda) sqrt(1 + |grad u|^2) dx dy,

evaluated here by trapezoid quadrature with one-sided gradient stencils
on the boundary ring.  At a genuine solution the derivative of J along
any perturbation vanishing on the boundary is zero; first_variation
measures that derivative by central differencing J itself, providing an
end-to-end check of the PDE solver that shares none of its discretization.

The cone family: a flat unit annulus plus a hanging cone of depth
sqrt(2 + 1/R^2) over the inner disk of radius R has total area exactly
2*pi for every R in (0, 1), yet its center of gravity

    -(1 + R^2)/6 * sqrt(2 + 1/R^2)

drops below any bound as R -> 0: with prescribed area and boundary there
is no lowest center of gravity, only local extrema.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dirichlet import GridFunction, grid_gradients
from .errors import InvalidParameterError
from . import surface as surface_mod

__all__ = [
    "functional_J",
    "first_variation",
    "perturbation_battery",
    "ConeAnnulusSurface",
    "ConeFamilyReport",
    "cone_annulus_surface",
    "cone_family_centroid",
    "sweep_cone_family",
    "write_cone_sweep_csv",
]


def functional_J(g: GridFunction, lam: float = 0.0) -> float:
    """Trapezoid quadrature of (u + lam) * sqrt(1 + |grad u|^2)."""
    p, q = grid_gradients(g.values, g.h)
    W = (g.values + lam) * np.sqrt(1.0 + p * p + q * q)
    wts = np.ones_like(W)
    wts[0, :] *= 0.5
    wts[-1, :] *= 0.5
    wts[:, 0] *= 0.5
    wts[:, -1] *= 0.5
    return float((W * wts).sum() * g.h * g.h)


def first_variation(g: GridFunction, perturbation: np.ndarray,
                    lam: float = 0.0, rel_step: float = 1e-6) -> float:
    """d/dt J(u + t*h) at t = 0 by central differences.

    The perturbation must vanish identically on the boundary ring.  The
    step is rel_step * max(1, |u|) / max |h|; a zero perturbation returns
    exactly 0.
    """
    pert = np.asarray(perturbation, dtype=float)
    if pert.shape != g.values.shape:
        raise InvalidParameterError("perturbation shape does not match the grid")
    ring = np.concatenate([pert[0, :], pert[-1, :], pert[1:-1, 0], pert[1:-1, -1]])
    if np.any(ring != 0):
        raise InvalidParameterError("perturbation must vanish on the boundary")
    pmax = float(np.abs(pert).max())
    if pmax == 0:
        return 0.0
    t = rel_step * max(1.0, float(np.abs(g.values).max())) / pmax
    up = GridFunction(g.nx, g.ny, g.h, g.values + t * pert, g.x0, g.y0)
    um = GridFunction(g.nx, g.ny, g.h, g.values - t * pert, g.x0, g.y0)
    return (functional_J(up, lam) - functional_J(um, lam)) / (2.0 * t)


def perturbation_battery(nx: int, ny: int, seed: int = 2024):
    """Fixed battery of 16 boundary-vanishing test fields.

    Eight deterministic shapes (low tensor sine modes and tapered Gaussian
    bumps of varying position and width) plus eight seeded random smooth
    superpositions of modes up to 3 with 1/(k^2 l^2) coefficient decay.
    Returns a list of (name, field) pairs; every field has unit maximum.
    """
    if nx < 3 or ny < 3:
        raise InvalidParameterError("grid too small for perturbations")
    xh = np.linspace(0.0, 1.0, nx)[:, None]
    yh = np.linspace(0.0, 1.0, ny)[None, :]

    def mode(k, l):
        return np.sin(k * np.pi * xh) * np.sin(l * np.pi * yh)

    fields = []
    for k, l in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        fields.append((f"sine_{k}{l}", mode(k, l)))
    taper = mode(1, 1)
    for cx, cy, s in [(0.35, 0.35, 0.65), (0.65, 0.45, 0.70), (0.5, 0.65, 0.75),
                      (0.4, 0.6, 0.68)]:
        bump = np.exp(-(((xh - cx) ** 2) + ((yh - cy) ** 2)) / (2 * s * s)) * taper
        fields.append((f"gauss_{cx}_{cy}", bump))
    rng = np.random.default_rng(seed)
    for ridx in range(8):
        f = np.zeros((nx, ny))
        for k in range(1, 4):
            for l in range(1, 4):
                f += rng.standard_normal() / (k * k * l * l) * mode(k, l)
        fields.append((f"random_{ridx}", f))
    out = []
    for name, f in fields:
        f = f / np.abs(f).max()
        f[0, :] = f[-1, :] = 0.0
        f[:, 0] = f[:, -1] = 0.0
        out.append((name, f))
    return out


@dataclass(frozen=True)
class ConeAnnulusSurface:
    """Flat unit annulus plus hanging cone; total area 2*pi for every R."""

    R: float
    depth: float

    def __post_init__(self):
        if not 0 < self.R < 1:
            raise InvalidParameterError(f"R must lie in (0, 1), got {self.R}")

    @property
    def cone_lateral_area(self) -> float:
        return math.pi * self.R * math.hypot(self.depth, self.R)

    @property
    def annulus_area(self) -> float:
        return math.pi * (1.0 - self.R * self.R)

    @property
    def total_area(self) -> float:
        return self.cone_lateral_area + self.annulus_area

    @property
    def centroid_height(self) -> float:
        # hollow-cone centroid sits depth/3 below the base
        return -(self.depth / 3.0) * self.cone_lateral_area / self.total_area


def cone_annulus_surface(R: float) -> ConeAnnulusSurface:
    """The member of the constant-area family at inner radius R: the cone
    depth sqrt(2 + 1/R^2) makes the total area exactly 2*pi."""
    if not 0 < R < 1:
        raise InvalidParameterError(f"R must lie in (0, 1), got {R}")
    return ConeAnnulusSurface(R=R, depth=math.sqrt(2.0 + 1.0 / (R * R)))


@dataclass(frozen=True)
class ConeFamilyReport:
    R: float
    depth: float
    area_closed: float
    cg_closed: float
    area_mesh: float
    cg_mesh: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cone_family_centroid(R: float, n_r: int = 48, n_theta: int = 128) -> ConeFamilyReport:
    """Closed-form area (2*pi) and centroid height of the cone-annulus
    surface at radius R, cross-validated against a triangle mesh."""
    surf = cone_annulus_surface(R)
    cg_closed = -(1.0 + R * R) / 6.0 * math.sqrt(2.0 + 1.0 / (R * R))
    mesh = surface_mod.cone_annulus_mesh(R, surf.depth, n_r=n_r, n_theta=n_theta)
    return ConeFamilyReport(
        R=R,
        depth=surf.depth,
        area_closed=2.0 * math.pi,
        cg_closed=cg_closed,
        area_mesh=surface_mod.mesh_area(mesh),
        cg_mesh=surface_mod.mesh_centroid_height(mesh),
    )


def sweep_cone_family(r_values, n_r: int = 48, n_theta: int = 128):
    return [cone_family_centroid(float(R), n_r=n_r, n_theta=n_theta) for R in r_values]


def write_cone_sweep_csv(reports, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["R", "depth", "area_closed", "cg_closed", "area_mesh", "cg_mesh"])
        for rep in reports:
            w.writerow([f"{rep.R:.15g}", f"{rep.depth:.15g}", f"{rep.area_closed:.15g}",
                        f"{rep.cg_closed:.15g}", f"{rep.area_mesh:.15g}",
                        f"{rep.cg_mesh:.15g}"])
