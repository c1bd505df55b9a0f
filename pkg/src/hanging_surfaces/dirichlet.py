"""Dirichlet problem for the singular minimal surface equation on a
rectangle.

The expanded quasilinear form

    (1 + u_y^2) u_xx - 2 u_x u_y u_xy + (1 + u_x^2) u_yy
        = (1/u) (1 + u_x^2 + u_y^2)

is discretized with second-order central differences on a uniform square
grid and solved by damped Newton iteration with an analytic Jacobian and
sparse direct linear solves.  The initial guess is the discrete harmonic
extension of the boundary data.

Existence can genuinely fail: the boundary data must satisfy
area(domain) / length(boundary) < max(phi), and even then nothing is
guaranteed.  Failures (residual stagnation, height collapsing toward the
degenerate u = 0 regime) are therefore reported as structured SolveReport
outcomes rather than exceptions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BadBoundaryError, InvalidParameterError

__all__ = [
    "GridFunction",
    "NewtonConfig",
    "SolveReport",
    "PropertyReport",
    "pde_residual",
    "harmonic_extension",
    "solve",
    "check_properties",
    "grid_gradients",
    "surface_area",
    "load_problem",
    "solve_problem",
    "write_solution_csv",
]


@dataclass(frozen=True)
class GridFunction:
    """Heights u on a uniform square-cell grid over a rectangle.

    values[i, j] sits at (x0 + i*h, y0 + j*h).  The boundary ring carries
    the Dirichlet data phi; all node values are strictly positive.
    """

    nx: int
    ny: int
    h: float
    values: np.ndarray
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise InvalidParameterError("grid needs nx, ny >= 3")
        if not self.h > 0:
            raise InvalidParameterError("grid spacing must be positive")
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.shape != (self.nx, self.ny):
            raise InvalidParameterError(
                f"values shape {v.shape} does not match grid ({self.nx}, {self.ny})")
        if not np.all(v > 0):
            raise InvalidParameterError("grid heights must be strictly positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def boundary_values(self) -> np.ndarray:
        """All boundary-node values as a flat array."""
        v = self.values
        return np.concatenate([v[0, :], v[-1, :], v[1:-1, 0], v[1:-1, -1]])

    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def domain_area(self) -> float:
        return (self.nx - 1) * (self.ny - 1) * self.h * self.h

    def boundary_length(self) -> float:
        return 2.0 * ((self.nx - 1) + (self.ny - 1)) * self.h


@dataclass(frozen=True)
class NewtonConfig:
    """Newton controls: residual tolerance, backtracking damping (step 1,
    halved down to min_step), and the positivity floor below which the
    height is considered collapsed (default 1e-6 * min(phi))."""

    max_iters: int = 30
    residual_tol: float = 1e-10
    min_step: float = 2.0 ** -20
    u_floor: float | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidParameterError("max_iters must be >= 1")
        if not self.residual_tol > 0:
            raise InvalidParameterError("residual_tol must be positive")
        if not 0 < self.min_step < 1:
            raise InvalidParameterError("min_step must lie in (0, 1)")
        if self.u_floor is not None and not self.u_floor > 0:
            raise InvalidParameterError("u_floor must be positive")


@dataclass
class SolveReport:
    """Structured solve outcome; status is one of converged,
    non_convergence, positivity_loss."""

    status: str
    iterations: int
    residual_norm: float
    effective_tol: float
    residual_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    positivity_node: tuple | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["positivity_node"] = (list(self.positivity_node)
                                if self.positivity_node else None)
        return json.dumps(d, indent=2)


def _stencil(U, h):
    u0 = U[1:-1, 1:-1]
    uE, uW = U[2:, 1:-1], U[:-2, 1:-1]
    uN, uS = U[1:-1, 2:], U[1:-1, :-2]
    uNE, uNW = U[2:, 2:], U[:-2, 2:]
    uSE, uSW = U[2:, :-2], U[:-2, :-2]
    p = (uE - uW) / (2 * h)
    q = (uN - uS) / (2 * h)
    uxx = (uE - 2 * u0 + uW) / h**2
    uyy = (uN - 2 * u0 + uS) / h**2
    uxy = (uNE - uSE - uNW + uSW) / (4 * h**2)
    return u0, p, q, uxx, uyy, uxy


def _residual_array(U, h):
    u0, p, q, uxx, uyy, uxy = _stencil(U, h)
    return ((1 + q * q) * uxx - 2 * p * q * uxy + (1 + p * p) * uyy
            - (1 + p * p + q * q) / u0)


def pde_residual(g: GridFunction, u_floor: float = 0.0) -> np.ndarray:
    """Central-difference residual of the expanded equation at interior
    nodes (shape (nx-2, ny-2)).  Raises when any height is at or below
    u_floor, where the equation degenerates."""
    if np.any(g.values <= u_floor):
        raise InvalidParameterError(
            f"height at or below floor {u_floor}; the equation degenerates at u = 0")
    return _residual_array(g.values, g.h)


def _jacobian(U, h):
    """Analytic Jacobian of the discrete residual on the 9-point stencil."""
    nx, ny = U.shape
    u0, p, q, uxx, uyy, uxy = _stencil(U, h)
    A = 1 + q * q
    B = 1 + p * p
    S = 1 + p * p + q * q
    dFdp = 2 * p * uyy - 2 * q * uxy - 2 * p / u0
    dFdq = 2 * q * uxx - 2 * p * uxy - 2 * q / u0
    ih2 = 1.0 / h**2
    i2h = 1.0 / (2 * h)
    i4h2 = 1.0 / (4 * h**2)
    coeffs = {
        (0, 0): -2 * A * ih2 - 2 * B * ih2 + S / u0**2,
        (1, 0): A * ih2 + dFdp * i2h,
        (-1, 0): A * ih2 - dFdp * i2h,
        (0, 1): B * ih2 + dFdq * i2h,
        (0, -1): B * ih2 - dFdq * i2h,
        (1, 1): -2 * p * q * i4h2,
        (-1, -1): -2 * p * q * i4h2,
        (1, -1): 2 * p * q * i4h2,
        (-1, 1): 2 * p * q * i4h2,
    }
    ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")

    def flat(i, j):
        return (i - 1) * (ny - 2) + (j - 1)

    me = flat(ii, jj)
    rows, cols, vals = [], [], []
    for (di, dj), c in coeffs.items():
        i2, j2 = ii + di, jj + dj
        m = (i2 >= 1) & (i2 <= nx - 2) & (j2 >= 1) & (j2 <= ny - 2)
        rows.append(me[m])
        cols.append(flat(i2, j2)[m])
        vals.append(c[m])
    n = (nx - 2) * (ny - 2)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))


def harmonic_extension(phi_grid: np.ndarray, h: float) -> np.ndarray:
    """Discrete harmonic extension of the boundary ring of phi_grid
    (5-point Laplacian, sparse direct solve)."""
    U = np.array(phi_grid, dtype=float)
    nx, ny = U.shape
    ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")

    def flat(i, j):
        return (i - 1) * (ny - 2) + (j - 1)

    me = flat(ii, jj)
    n = (nx - 2) * (ny - 2)
    rows = [me.ravel()]
    cols = [me.ravel()]
    vals = [np.full(n, -4.0)]
    rhs = np.zeros((nx - 2, ny - 2))
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        i2, j2 = ii + di, jj + dj
        inside = (i2 >= 1) & (i2 <= nx - 2) & (j2 >= 1) & (j2 <= ny - 2)
        rows.append(me[inside])
        cols.append(flat(i2, j2)[inside])
        vals.append(np.ones(int(inside.sum())))
        rhs[~inside] -= U[i2[~inside], j2[~inside]]
    L = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))
    U[1:-1, 1:-1] = spla.spsolve(L, rhs.ravel()).reshape(nx - 2, ny - 2)
    return U


def _round_floor(U, h):
    """Attainable double-precision residual magnitude: the second-derivative
    stencils amplify rounding by ~(coefficient scale)/h^2."""
    _, p, q, _, _, _ = _stencil(U, h)
    amp = float(np.max(1 + p * p) + np.max(1 + q * q))
    return 8.0 * np.finfo(float).eps * max(1.0, float(np.abs(U).max())) * amp / h**2


def solve(phi, nx: int, ny: int, h: float, cfg: NewtonConfig | None = None,
          x0: float = 0.0, y0: float = 0.0):
    """Solve the Dirichlet problem with boundary data phi.

    phi may be a (nx, ny) array (only its boundary ring is used), a
    callable phi(x, y), or a positive constant.  Returns (GridFunction,
    SolveReport); the grid holds the best iterate even when the report
    status is a failure.  Raises BadBoundaryError when phi <= 0 anywhere
    on the boundary.
    """
    cfg = cfg or NewtonConfig()
    x = x0 + h * np.arange(nx)
    y = y0 + h * np.arange(ny)
    if callable(phi):
        X, Y = np.meshgrid(x, y, indexing="ij")
        full = np.asarray(phi(X, Y), dtype=float)
        if full.shape != (nx, ny):
            full = np.broadcast_to(full, (nx, ny)).copy()
    elif np.isscalar(phi):
        full = np.full((nx, ny), float(phi))
    else:
        full = np.array(phi, dtype=float)
        if full.shape != (nx, ny):
            raise InvalidParameterError(
                f"boundary array shape {full.shape} does not match grid ({nx}, {ny})")
    ring = np.concatenate([full[0, :], full[-1, :], full[1:-1, 0], full[1:-1, -1]])
    if not np.all(ring > 0):
        raise BadBoundaryError("boundary data must be strictly positive")

    u_floor = cfg.u_floor if cfg.u_floor is not None else 1e-6 * float(ring.min())
    U = harmonic_extension(full, h)
    # the harmonic extension of positive data is positive (max principle)
    report = SolveReport(status="non_convergence", iterations=0,
                         residual_norm=math.inf, effective_tol=cfg.residual_tol)

    for it in range(cfg.max_iters):
        F = _residual_array(U, h)
        nrm = float(np.abs(F).max())
        report.residual_history.append(nrm)
        eff_tol = max(cfg.residual_tol, _round_floor(U, h))
        report.effective_tol = eff_tol
        if nrm < eff_tol:
            report.status = "converged"
            report.iterations = it
            report.residual_norm = nrm
            break
        delta = spla.spsolve(_jacobian(U, h), -F.ravel()).reshape(nx - 2, ny - 2)
        t = 1.0
        accepted = False
        last_rejection = ""
        while t >= cfg.min_step:
            trial = U.copy()
            trial[1:-1, 1:-1] += t * delta
            tmin = float(trial[1:-1, 1:-1].min())
            if tmin <= u_floor:
                last_rejection = "positivity"
            elif float(np.abs(_residual_array(trial, h)).max()) < nrm:
                accepted = True
                break
            else:
                last_rejection = "no_decrease"
            t *= 0.5
        if not accepted:
            report.iterations = it
            report.residual_norm = nrm
            if last_rejection == "positivity":
                trial = U.copy()
                trial[1:-1, 1:-1] += cfg.min_step * delta
                flat_idx = int(np.argmin(trial[1:-1, 1:-1]))
                node = (flat_idx // (ny - 2) + 1, flat_idx % (ny - 2) + 1)
                report.status = "positivity_loss"
                report.positivity_node = node
                report.message = (f"height collapsed toward the floor {u_floor:g} "
                                  f"near node {node}")
            else:
                report.status = "non_convergence"
                report.message = (f"line search stalled at residual {nrm:g} "
                                  f"(tol {eff_tol:g})")
            break
        report.step_history.append(t)
        U = trial
    else:
        F = _residual_array(U, h)
        report.status = "non_convergence"
        report.iterations = cfg.max_iters
        report.residual_norm = float(np.abs(F).max())
        report.message = "iteration budget exhausted"

    # keep the best iterate presentable even on failure
    U = np.maximum(U, 0.5 * u_floor) if report.status == "positivity_loss" else U
    grid = GridFunction(nx=nx, ny=ny, h=h, values=np.maximum(U, np.finfo(float).tiny),
                        x0=x0, y0=y0)
    return grid, report


def grid_gradients(values: np.ndarray, h: float):
    """(u_x, u_y) on the full grid: central differences inside, one-sided
    second-order stencils on the boundary ring."""
    U = values
    p = np.empty_like(U)
    q = np.empty_like(U)
    p[1:-1, :] = (U[2:, :] - U[:-2, :]) / (2 * h)
    q[:, 1:-1] = (U[:, 2:] - U[:, :-2]) / (2 * h)
    p[0, :] = (-3 * U[0, :] + 4 * U[1, :] - U[2, :]) / (2 * h)
    p[-1, :] = (3 * U[-1, :] - 4 * U[-2, :] + U[-3, :]) / (2 * h)
    q[:, 0] = (-3 * U[:, 0] + 4 * U[:, 1] - U[:, 2]) / (2 * h)
    q[:, -1] = (3 * U[:, -1] - 4 * U[:, -2] + U[:, -3]) / (2 * h)
    return p, q


def surface_area(g: GridFunction) -> float:
    """Trapezoid quadrature of sqrt(1 + |grad u|^2) over the rectangle."""
    p, q = grid_gradients(g.values, g.h)
    W = np.sqrt(1.0 + p * p + q * q)
    wts = np.ones_like(W)
    wts[0, :] *= 0.5
    wts[-1, :] *= 0.5
    wts[:, 0] *= 0.5
    wts[:, -1] *= 0.5
    return float((W * wts).sum() * g.h * g.h)


@dataclass(frozen=True)
class PropertyReport:
    """Qualitative checks every genuine solution must satisfy."""

    interior_max: float
    boundary_max: float
    no_interior_max: bool
    boundary_constant: float | None
    below_constant_plane: bool | None
    area_over_perimeter: float
    area_length_ok: bool
    domain_area: float
    surface_area: float
    surface_exceeds_domain: bool

    @property
    def all_pass(self) -> bool:
        checks = [self.no_interior_max, self.area_length_ok, self.surface_exceeds_domain]
        if self.below_constant_plane is not None:
            checks.append(self.below_constant_plane)
        return all(checks)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def check_properties(g: GridFunction) -> PropertyReport:
    """Evaluate the four qualitative solution properties on a grid:
    no interior maximum, below any constant boundary plane, the
    area/perimeter necessary condition, and area(S) > area(domain)."""
    ring = g.boundary_values()
    interior_max = float(g.interior().max())
    boundary_max = float(ring.max())
    constant = float(ring[0]) if np.allclose(ring, ring[0], rtol=1e-12, atol=0) else None
    ratio = g.domain_area() / g.boundary_length()
    area_s = surface_area(g)
    return PropertyReport(
        interior_max=interior_max,
        boundary_max=boundary_max,
        no_interior_max=interior_max < boundary_max,
        boundary_constant=constant,
        below_constant_plane=None if constant is None else bool(
            np.all(g.interior() < constant)),
        area_over_perimeter=ratio,
        area_length_ok=ratio < boundary_max,
        domain_area=g.domain_area(),
        surface_area=area_s,
        surface_exceeds_domain=area_s > g.domain_area(),
    )


# ---------------------------------------------------------------------------
# JSON problem specs and CSV output

_EXPR_NAMES = {
    "cosh": np.cosh, "sinh": np.sinh, "tanh": np.tanh, "exp": np.exp,
    "sqrt": np.sqrt, "sin": np.sin, "cos": np.cos, "abs": np.abs,
    "pi": np.pi, "log": np.log,
}


def _boundary_from_spec(spec: dict, base_dir: Path):
    kind = spec.get("kind")
    if kind == "constant":
        value = float(spec["value"])
        return lambda X, Y: np.full_like(X, value)
    if kind == "expression":
        expr = spec["expr"]
        code = compile(expr, "<boundary-expression>", "eval")

        def f(X, Y):
            ns = dict(_EXPR_NAMES)
            ns.update({"x": X, "y": Y})
            return np.asarray(eval(code, {"__builtins__": {}}, ns), dtype=float)

        return f
    if kind == "csv":
        path = base_dir / spec["path"]
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)

        def f(X, Y):
            full = np.full(X.shape, np.nan)
            for i, j, v in rows:
                full[int(i), int(j)] = v
            return full

        return f
    raise InvalidParameterError(f"unknown boundary kind {kind!r}")


def load_problem(path):
    """Parse a JSON problem spec: domain rectangle, grid size, boundary
    data (constant / expression / per-node CSV), optional newton block."""
    path = Path(path)
    spec = json.loads(path.read_text())
    dom = spec["domain"]
    grid = spec["grid"]
    nx, ny = int(grid["nx"]), int(grid["ny"])
    hx = (float(dom["x_max"]) - float(dom["x_min"])) / (nx - 1)
    hy = (float(dom["y_max"]) - float(dom["y_min"])) / (ny - 1)
    if not math.isclose(hx, hy, rel_tol=1e-12):
        raise InvalidParameterError(
            f"grid cells must be square: hx={hx}, hy={hy}")
    phi = _boundary_from_spec(spec["boundary"], path.parent)
    newton = spec.get("newton", {})
    cfg = NewtonConfig(
        max_iters=int(newton.get("max_iters", 30)),
        residual_tol=float(newton.get("residual_tol", 1e-10)),
    )
    return {
        "phi": phi, "nx": nx, "ny": ny, "h": hx,
        "x0": float(dom["x_min"]), "y0": float(dom["y_min"]), "cfg": cfg,
    }


def solve_problem(path):
    """Solve a JSON problem spec; returns (GridFunction, SolveReport,
    PropertyReport | None)."""
    prob = load_problem(path)
    grid, report = solve(prob["phi"], prob["nx"], prob["ny"], prob["h"],
                         prob["cfg"], x0=prob["x0"], y0=prob["y0"])
    props = check_properties(grid) if report.converged else None
    return grid, report, props


def write_solution_csv(g: GridFunction, path) -> None:
    """Node table i,j,x,y,u with 15 significant digits."""
    path = Path(path)
    x, y = g.x, g.y
    with open(path, "w", newline="") as fh:
        fh.write("i,j,x,y,u\n")
        for i in range(g.nx):
            for j in range(g.ny):
                fh.write(f"{i},{j},{x[i]:.15g},{y[j]:.15g},{g.values[i, j]:.15g}\n")
