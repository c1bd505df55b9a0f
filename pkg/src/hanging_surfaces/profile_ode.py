"""Generating curves of rotational hanging surfaces with a vertical axis.

The height profile u(r) of such a surface satisfies

    u'' / (1 + u'^2) = 1/u - u'/r,

which is singular both at the rotation axis r = 0 and at u = 0.  Starting
on the axis therefore needs an analytic seed: smoothness forces u'(0) = 0
and u''(0) = 1/(2 u(0)), so the integration starts a small offset delta
off the axis from the two-term expansion

    u(delta)  = u0 + delta^2 / (4 u0),
    u'(delta) = delta / (2 u0).

Away from the axis the equation is integrated with an adaptive embedded
Dormand-Prince 5(4) pair under PI step-size control.  Profiles started at
interior radii with u'(r0) = 0 never reach the axis; integrating toward
r = 0 they steepen without bound at some r* > 0, which the integrator
localizes by bisection and records as a blow-up termination.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError, InvalidRegimeError, SingularInputError

__all__ = [
    "TerminationKind",
    "Termination",
    "InitialData",
    "IntegratorConfig",
    "Profile",
    "rotational_residual",
    "integrate_from_axis",
    "integrate_from_interior",
    "save_profile",
    "load_profile",
]

# Fraction of u0 below which the height guard trips (u -> 0 regime).
_FLOOR_FRACTION = 1e-9
# Bisection iterations used to localize a cap crossing inside one step:
# 2**-60 of a step is far below the documented 1e-8 relative target.
_BISECT_ITERS = 60


class TerminationKind(enum.Enum):
    REACHED_TARGET = "reached_target"
    SLOPE_BLOW_UP = "slope_blow_up"
    HEIGHT_BLOW_UP = "height_blow_up"
    REACHED_AXIS = "reached_axis"


@dataclass(frozen=True)
class Termination:
    """How an integration ended and where."""

    kind: TerminationKind
    abscissa: float


@dataclass(frozen=True)
class InitialData:
    r0: float
    u0: float
    du0: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step limits, and blow-up thresholds.

    seed_offset and height_cap default to None, meaning 1e-4 * u0 and
    1e6 * u0 for the problem at hand.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.01
    seed_offset: float | None = None
    slope_cap: float = 1e6
    height_cap: float | None = None

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "slope_cap"):
            v = getattr(self, name)
            if not v > 0:
                raise InvalidParameterError(f"{name} must be positive, got {v}")
        for name in ("seed_offset", "height_cap"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidParameterError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class Profile:
    """Sampled generating curve (abscissa, height, slope).

    Abscissae are strictly monotone in integration order (increasing for
    forward runs, decreasing for backward runs) and heights are strictly
    positive.  Arrays are frozen; Profile values are safe to share across
    threads.
    """

    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    termination: Termination
    params: InitialData

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        u = np.asarray(self.u, dtype=float)
        du = np.asarray(self.du, dtype=float)
        if not (r.shape == u.shape == du.shape) or r.ndim != 1 or len(r) < 2:
            raise InvalidParameterError("profile needs matching 1-d arrays with >= 2 samples")
        steps = np.diff(r)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise InvalidParameterError("profile abscissae must be strictly monotone")
        if not np.all(u > 0):
            raise InvalidParameterError("profile heights must be strictly positive")
        for name, arr in (("r", r), ("u", u), ("du", du)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self) -> int:
        return len(self.r)

    @property
    def ascending(self) -> bool:
        return bool(self.r[-1] > self.r[0])

    def evaluate(self, r_query):
        """Cubic-Hermite evaluation of (u, du) between samples.

        Uses the stored slopes as derivative data, so the interpolation
        error is O(h^4) in the local sample spacing.  Queries outside the
        sampled range raise.
        """
        rq = np.asarray(r_query, dtype=float)
        scalar = rq.ndim == 0
        rq = np.atleast_1d(rq)
        if self.ascending:
            ra, ua, dua = self.r, self.u, self.du
        else:
            ra, ua, dua = self.r[::-1], self.u[::-1], self.du[::-1]
        if np.any(rq < ra[0]) or np.any(rq > ra[-1]):
            raise InvalidParameterError(
                f"query outside sampled range [{ra[0]}, {ra[-1]}]")
        k = np.clip(np.searchsorted(ra, rq, side="right") - 1, 0, len(ra) - 2)
        h = ra[k + 1] - ra[k]
        t = (rq - ra[k]) / h
        t2, t3 = t * t, t * t * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        uq = h00 * ua[k] + h10 * h * dua[k] + h01 * ua[k + 1] + h11 * h * dua[k + 1]
        dh00 = (6 * t2 - 6 * t) / h
        dh10 = 3 * t2 - 4 * t + 1
        dh01 = (-6 * t2 + 6 * t) / h
        dh11 = 3 * t2 - 2 * t
        duq = dh00 * ua[k] + dh10 * dua[k] + dh01 * ua[k + 1] + dh11 * dua[k + 1]
        if scalar:
            return float(uq[0]), float(duq[0])
        return uq, duq

    def residuals(self) -> np.ndarray:
        """Equation residual at every sample away from the axis.

        The curvature term is evaluated from the equation's right-hand
        side at the stored (r, u, du), so this is the defining-property
        residual: it vanishes identically when the stored data is
        self-consistent.  Independent checks (slope vs finite differences
        of heights) live in the test suite.
        """
        mask = self.r != 0
        r, u, du = self.r[mask], self.u[mask], self.du[mask]
        d2u = _rhs_d2u(r, u, du)
        return rotational_residual(r, u, du, d2u)


def rotational_residual(r, u, du, d2u):
    """Residual u''/(1+u'^2) - 1/u + u'/r of the rotational equation.

    Exactly zero iff the quadruple satisfies the equation.  Accepts
    scalars or arrays; raises SingularInputError on r = 0 or u = 0 where
    the equation is singular.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    d2u = np.asarray(d2u, dtype=float)
    if np.any(r == 0):
        raise SingularInputError("rotational equation is singular at r = 0")
    if np.any(u == 0):
        raise SingularInputError("rotational equation is singular at u = 0")
    res = d2u / (1.0 + du * du) - 1.0 / u + du / r
    return float(res) if res.ndim == 0 else res


def _rhs_d2u(r, u, du):
    return (1.0 / u - du / r) * (1.0 + du * du)


def _rhs(r, y):
    u, du = y
    return np.array([du, (1.0 / u - du / r) * (1.0 + du * du)])


# Dormand-Prince 5(4) tableau (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b5 - b4: error estimator weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _dp_step(r, y, h, f0):
    """One Dormand-Prince step of size h from (r, y) given f0 = f(r, y).

    Returns (y_new, f_new, error_vector).  f_new is the FSAL evaluation
    reusable as the next step's f0.
    """
    k = np.empty((7, 2))
    k[0] = f0
    for i in range(1, 7):
        k[i] = _rhs(r + _C[i] * h, y + h * (_A[i] @ k[:i]))
    y_new = y + h * (_B5 @ k)
    err = h * (_E @ k)
    return y_new, k[6], err


def _err_norm(err, y, y_new, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


class _CapEvents:
    """Terminal conditions checked after every accepted step."""

    def __init__(self, slope_cap, height_cap, u_floor):
        self.tests = [
            (TerminationKind.SLOPE_BLOW_UP, lambda y: abs(y[1]) - slope_cap),
            (TerminationKind.HEIGHT_BLOW_UP, lambda y: y[0] - height_cap),
            (TerminationKind.REACHED_AXIS, lambda y: u_floor - y[0]),
        ]

    def triggered(self, y):
        return [(kind, g) for kind, g in self.tests if g(y) >= 0]


def _bisect_event(r, y, h, f0, g):
    """Localize the first g >= 0 crossing inside an accepted step.

    Candidate states are produced by a single Dormand-Prince substep of
    size theta*h from the step's start, which is locally 5th-order
    accurate; theta is refined by bisection.
    """
    lo, hi = 0.0, 1.0
    y_hi, _, _ = _dp_step(r, y, h, f0)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        y_mid, _, _ = _dp_step(r, y, mid * h, f0)
        if g(y_mid) >= 0:
            hi, y_hi = mid, y_mid
        else:
            lo = mid
    return hi, y_hi


def _integrate(r_start, y_start, r_target, cfg, u_floor, kind_at_target):
    """Adaptive DP5(4) with PI step control from r_start to r_target.

    Returns (r_samples, y_samples, Termination).  Terminal cap events are
    bisected inside the offending step; the crossing state becomes the
    final sample.
    """
    direction = 1.0 if r_target > r_start else -1.0
    span = abs(r_target - r_start)
    height_cap = cfg.height_cap
    events = _CapEvents(cfg.slope_cap, height_cap, u_floor)

    rs = [r_start]
    ys = [y_start.copy()]
    r, y = r_start, y_start.copy()
    f0 = _rhs(r, y)
    h = direction * min(cfg.max_step, max(span * 1e-3, 1e3 * np.finfo(float).tiny))
    err_prev = 1.0
    safety, min_factor, max_factor = 0.9, 0.2, 5.0
    # PI exponents for an order-4 error estimate (Hairer's PI.4.2)
    k_exp = 5.0
    alpha, beta = 0.7 / k_exp, 0.4 / k_exp

    max_steps = 10_000_000
    for _ in range(max_steps):
        if direction * (r_target - r) <= 0:
            break
        h = direction * min(abs(h), cfg.max_step)
        last = direction * (r + h - r_target) >= 0
        if last:
            h = r_target - r
        y_new, f_new, err = _dp_step(r, y, h, f0)
        if not np.all(np.isfinite(y_new)):
            h *= 0.25
            if abs(h) < 1e3 * np.finfo(float).tiny * max(1.0, abs(r)):
                raise InvalidRegimeError(
                    f"step size underflow at r={r!r} (state {y!r})")
            continue
        err_norm = _err_norm(err, y, y_new, cfg.rel_tol, cfg.abs_tol)
        if err_norm > 1.0:
            h *= max(min_factor, safety * err_norm ** (-1.0 / k_exp))
            if abs(h) < 1e3 * np.finfo(float).tiny * max(1.0, abs(r)):
                raise InvalidRegimeError(
                    f"step size underflow at r={r!r} (state {y!r})")
            continue
        fired = events.triggered(y_new)
        if fired:
            best = None
            for kind, g in fired:
                theta, y_ev = _bisect_event(r, y, h, f0, g)
                if best is None or theta < best[0]:
                    best = (theta, y_ev, kind)
            theta, y_ev, kind = best
            r_ev = r + theta * h
            rs.append(r_ev)
            ys.append(y_ev)
            return np.array(rs), np.array(ys), Termination(kind, float(r_ev))
        r, y, f0 = r + h, y_new, f_new
        rs.append(r)
        ys.append(y)
        if last:
            break
        factor = safety * err_norm ** (-alpha) * err_prev ** beta if err_norm > 0 else max_factor
        h *= min(max_factor, max(min_factor, factor))
        err_prev = err_norm if err_norm > 0 else 1.0
    else:
        raise InvalidRegimeError("step budget exhausted; integration did not terminate")
    return np.array(rs), np.array(ys), Termination(kind_at_target, float(r))


def integrate_from_axis(u0: float, r_max: float, cfg: IntegratorConfig | None = None) -> Profile:
    """Integrate the axis-touching profile with u(0) = u0, u'(0) = 0.

    The run is seeded off the r = 0 singularity by the two-term expansion
    at offset delta (default 1e-4 * u0), whose truncation error is
    O(delta^4), then advanced adaptively to r_max or to a blow-up event.
    The exact axis point (0, u0, 0) is prepended to the samples.
    """
    if not u0 > 0:
        raise InvalidParameterError(f"u0 must be positive, got {u0}")
    if not r_max > 0:
        raise InvalidParameterError(f"r_max must be positive, got {r_max}")
    cfg = cfg or IntegratorConfig()
    delta = cfg.seed_offset if cfg.seed_offset is not None else 1e-4 * u0
    if delta >= r_max:
        raise InvalidParameterError(
            f"seed offset {delta} must be smaller than r_max {r_max}")
    y_seed = np.array([u0 + delta * delta / (4.0 * u0), delta / (2.0 * u0)])
    height_cap = cfg.height_cap if cfg.height_cap is not None else 1e6 * u0
    cfg_eff = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step,
                               delta, cfg.slope_cap, height_cap)
    u_floor = _FLOOR_FRACTION * u0
    rs, ys, term = _integrate(delta, y_seed, r_max, cfg_eff, u_floor,
                              TerminationKind.REACHED_TARGET)
    if term.kind is TerminationKind.REACHED_AXIS:
        raise InvalidRegimeError(
            "height collapsed toward the singular regime u = 0; axis-started "
            "profiles cannot do this for valid initial data")
    r_all = np.concatenate([[0.0], rs])
    u_all = np.concatenate([[u0], ys[:, 0]])
    du_all = np.concatenate([[0.0], ys[:, 1]])
    return Profile(r_all, u_all, du_all, term, InitialData(0.0, u0, 0.0))


def integrate_from_interior(r0: float, u0: float, du0: float, r_end: float,
                            cfg: IntegratorConfig | None = None) -> Profile:
    """Integrate from interior data u(r0) = u0, u'(r0) = du0 toward r_end.

    r_end may lie on either side of r0 (backward integration allowed).
    Toward the axis the profile generically steepens without bound and
    the run ends with a blow-up record at some r* > 0; only height decay
    to the u -> 0 floor (the cone-like singular regime) is reported as
    ReachedAxis.
    """
    if not r0 > 0:
        raise InvalidParameterError(f"r0 must be positive, got {r0}")
    if not u0 > 0:
        raise InvalidParameterError(f"u0 must be positive, got {u0}")
    if r_end < 0:
        raise InvalidParameterError(f"r_end must be >= 0, got {r_end}")
    if r_end == r0:
        raise InvalidParameterError("r_end must differ from r0")
    cfg = cfg or IntegratorConfig()
    height_cap = cfg.height_cap if cfg.height_cap is not None else 1e6 * u0
    cfg_eff = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step,
                               cfg.seed_offset, cfg.slope_cap, height_cap)
    u_floor = _FLOOR_FRACTION * u0
    # the equation cannot be evaluated at r = 0 itself
    target = r_end if r_end > 0 else 1e-12 * r0
    kind = TerminationKind.REACHED_TARGET if r_end > 0 else TerminationKind.REACHED_AXIS
    y0 = np.array([u0, du0])
    rs, ys, term = _integrate(r0, y0, target, cfg_eff, u_floor, kind)
    return Profile(rs, ys[:, 0], ys[:, 1], term, InitialData(r0, u0, du0))


def save_profile(profile: Profile, csv_path, sidecar_path=None) -> None:
    """Write samples as CSV (header r,u,du, 15 significant digits) plus a
    JSON sidecar holding termination and initial data."""
    csv_path = Path(csv_path)
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "u", "du"])
        for r, u, du in zip(profile.r, profile.u, profile.du):
            w.writerow([f"{r:.15g}", f"{u:.15g}", f"{du:.15g}"])
    record = {
        "termination": {
            "kind": profile.termination.kind.value,
            "abscissa": profile.termination.abscissa,
        },
        "params": {
            "r0": profile.params.r0,
            "u0": profile.params.u0,
            "du0": profile.params.du0,
        },
        "n_samples": profile.n_samples,
    }
    sidecar.write_text(json.dumps(record, indent=2))


def load_profile(csv_path, sidecar_path=None) -> Profile:
    """Round-trip reader for save_profile output."""
    csv_path = Path(csv_path)
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(sidecar.read_text())
    term = Termination(TerminationKind(meta["termination"]["kind"]),
                       float(meta["termination"]["abscissa"]))
    params = InitialData(**{k: float(v) for k, v in meta["params"].items()})
    return Profile(rows[:, 0], rows[:, 1], rows[:, 2], term, params)
