"""Catenaries and 2-catenaries (generating curves of horizontal-axis roofs).

The classical catenary u = cosh(a x + b) / a solves u''/(1+u'^2) = 1/u.
Replacing the right side by 2/u gives the 2-catenary, the generating
curve of a surface of revolution about a horizontal axis.  Multiplying by
u' and integrating yields the first integral

    u'^2 = c^2 u^4 - 1,      c != 0,

so u'' = 2 c^2 u^3 and the curve is convex with a single minimum
u_min = 1/sqrt(c).  Its maximal domain is the bounded interval (-a, a)
with u -> infinity at both ends; substituting u = u_min/s turns the
half-width into

    a(c) = (1/sqrt(c)) * int_0^1 ds / sqrt(1 - s^4),

an endpoint-singular integral evaluated here by tanh-sinh quadrature
(a(1) = 1.3110287771...).

Numerically the curve is never integrated as u(x), whose slope blows up
at +-a.  Samples are placed at uniform tangent angle psi = atan(u'),
where the first integral gives the height in closed form,
u = u_min * sqrt(sec psi), and only the abscissa x(u) requires
quadrature.  That removes the blow-up from the numerics entirely.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .profile_ode import InitialData, Profile, Termination, TerminationKind
from .quadrature import QuadratureResult, tanh_sinh

__all__ = [
    "Catenary",
    "TwoCatenary",
    "catenary_eval",
    "two_catenary_halfwidth",
    "two_catenary_build",
    "save_two_catenary",
]

# relative height offset below which x(u) switches to the local expansion
_SERIES_CUTOFF = 1e-8


@dataclass(frozen=True)
class Catenary:
    """u(x) = cosh(a x + b) / a with a != 0."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.a == 0:
            raise InvalidParameterError("catenary parameter a must be nonzero")

    def eval(self, x):
        """Return (u, du, d2u) at x; satisfies u''/(1+u'^2) = 1/u exactly."""
        z = self.a * np.asarray(x, dtype=float) + self.b
        u = np.cosh(z) / self.a
        du = np.sinh(z)
        d2u = self.a * np.cosh(z)
        if np.ndim(x) == 0:
            return float(u), float(du), float(d2u)
        return u, du, d2u


def catenary_eval(a: float, b: float, x):
    """Closed-form catenary value and first two derivatives at x."""
    return Catenary(a, b).eval(x)


def _inv_sqrt_one_minus_s4(s, dist0, dist1):
    # 1 - s^4 = (1-s)(1+s)(1+s^2); dist1 carries 1-s at full precision
    return 1.0 / np.sqrt(dist1 * (1.0 + s) * (1.0 + s * s))


def two_catenary_halfwidth(c: float, rel_tol: float = 1e-12) -> QuadratureResult:
    """Half-width a(c) of the maximal domain of a 2-catenary.

    Evaluates (1/sqrt(c)) * int_0^1 ds/sqrt(1-s^4) by tanh-sinh
    quadrature; the error estimate is the difference of the last two
    refinement levels, scaled like the value.
    """
    if not c > 0:
        raise InvalidParameterError(f"first-integral constant c must be positive, got {c}")
    base = tanh_sinh(_inv_sqrt_one_minus_s4, 0.0, 1.0, rel_tol=rel_tol)
    scale = 1.0 / math.sqrt(c)
    return QuadratureResult(
        value=scale * base.value,
        error_estimate=scale * base.error_estimate,
        levels=base.levels,
        evaluations=base.evaluations,
    )


@dataclass(frozen=True)
class TwoCatenary:
    """A sampled 2-catenary branch pair, symmetric about x = 0.

    profile reuses the rotational Profile container: abscissae are the
    x positions on [-(a - margin), a - margin], heights the curve values,
    slopes the first-integral slopes +-sqrt(c^2 u^4 - 1).
    """

    c: float
    u_min: float
    half_width: float
    margin: float
    profile: Profile
    halfwidth_quadrature: QuadratureResult

    def first_integral_residual(self) -> np.ndarray:
        """u'^2 - (c^2 u^4 - 1) at every sample (zero in exact arithmetic)."""
        u, du = self.profile.u, self.profile.du
        return du * du - (self.c ** 2 * u ** 4 - 1.0)

    def curvature_numerator(self) -> np.ndarray:
        """u'' from the differentiated first integral, 2 c^2 u^3 (> 0)."""
        return 2.0 * self.c ** 2 * self.profile.u ** 3

    def to_json_record(self) -> dict:
        return {
            "c": self.c,
            "u_min": self.u_min,
            "half_width": self.half_width,
            "margin": self.margin,
            "halfwidth_error_estimate": self.halfwidth_quadrature.error_estimate,
            "n_samples": self.profile.n_samples,
        }


def _x_of_u(u, u_min, i4_value):
    """Abscissa of the right branch at height u (>= u_min).

    x(u) = u_min * int_{u_min/u}^{1} ds/sqrt(1-s^4).  Near the minimum the
    integrand's square-root endpoint singularity is handled by the matched
    local expansion x ~= u_min*sqrt(w)*(1 + w/4), w = 1 - u_min/u.
    """
    if u < u_min:
        raise InvalidParameterError("height below the curve minimum")
    if u == u_min:
        return 0.0
    s_u = u_min / u
    w = 1.0 - s_u
    if w < _SERIES_CUTOFF:
        return u_min * math.sqrt(w) * (1.0 + 0.25 * w)
    if s_u < 0.5:
        # complement form keeps the short smooth piece cheap for tall u
        left = tanh_sinh(lambda s, d0, d1: 1.0 / np.sqrt(1.0 - s ** 4), 0.0, s_u)
        return u_min * (i4_value - left.value)
    part = tanh_sinh(_inv_sqrt_one_minus_s4, s_u, 1.0)
    return u_min * part.value


def two_catenary_build(u_min: float, n_samples: int = 801,
                       margin: float | None = None) -> TwoCatenary:
    """Sample the 2-catenary with minimum height u_min on [-a+eps, a-eps].

    Samples sit at uniform tangent angle: u = u_min*sqrt(sec psi) and
    u' = tan psi come from the first integral in closed form, and only the
    abscissa x(u) is computed by quadrature, so no quantity ever blows up.
    The right branch is mirrored to x < 0.  n_samples is rounded up to the
    next odd count so that x = 0 is always a sample.

    margin defaults to 1e-3 * a(c).
    """
    if not u_min > 0:
        raise InvalidParameterError(f"u_min must be positive, got {u_min}")
    if n_samples < 5:
        raise InvalidParameterError("need at least 5 samples")
    c = 1.0 / (u_min * u_min)
    hw = two_catenary_halfwidth(c)
    a = hw.value
    eps = 1e-3 * a if margin is None else float(margin)
    if not 0 < eps < a:
        raise InvalidParameterError(
            f"margin must lie in (0, a) = (0, {a}), got {eps}")

    i4 = a / u_min  # int_0^1 ds/sqrt(1-s^4), reused by _x_of_u
    x_end = a - eps
    # height at the truncated end: Newton on x(u) = x_end from the
    # asymptote 1/(c*(a-x)); dx/du = 1/sqrt(c^2 u^4 - 1)
    u_end = max(1.0 / (c * eps), u_min * (1.0 + 1e-6))
    for _ in range(60):
        g = _x_of_u(u_end, u_min, i4) - x_end
        if abs(g) <= 1e-13 * a:
            break
        step = -g * math.sqrt(max(c * c * u_end ** 4 - 1.0, 1e-300))
        u_next = u_end + step
        if u_next <= u_min:
            u_next = 0.5 * (u_end + u_min)
        u_end = u_next

    m = (n_samples + 1) // 2  # samples on the closed right branch incl. x=0
    psi_end = math.atan(math.sqrt(max(c * c * u_end ** 4 - 1.0, 0.0)))
    psi = np.linspace(0.0, psi_end, m)
    u_right = u_min * np.sqrt(1.0 / np.cos(psi))
    du_right = np.tan(psi)
    x_right = np.array([_x_of_u(float(u), u_min, i4) for u in u_right])
    x_right[0] = 0.0
    u_right[0] = u_min
    du_right[0] = 0.0

    x = np.concatenate([-x_right[:0:-1], x_right])
    u = np.concatenate([u_right[:0:-1], u_right])
    du = np.concatenate([-du_right[:0:-1], du_right])
    term = Termination(TerminationKind.REACHED_TARGET, float(x_right[-1]))
    profile = Profile(x, u, du, term, InitialData(0.0, u_min, 0.0))
    return TwoCatenary(c=c, u_min=u_min, half_width=a, margin=eps,
                       profile=profile, halfwidth_quadrature=hw)


def save_two_catenary(tc: TwoCatenary, csv_path, sidecar_path=None) -> None:
    """CSV in the shared profile format (header x,u,du) plus a JSON record
    carrying c, u_min, a(c) and the quadrature error estimate."""
    csv_path = Path(csv_path)
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        fh.write("x,u,du\n")
        for x, u, du in zip(tc.profile.r, tc.profile.u, tc.profile.du):
            fh.write(f"{x:.15g},{u:.15g},{du:.15g}\n")
    sidecar.write_text(json.dumps(tc.to_json_record(), indent=2))
