"""Command-line entry point.

One subcommand per capability, file-based I/O, deterministic given equal
flags.  Failures exit nonzero with a machine-readable JSON record on
stderr, one exit code per error family:

    2  invalid-argument   bad flag values, violated preconditions
    3  solve-failure      structured numerical failure (reported, not a bug)
    4  io-error           unreadable/unwritable paths
    5  parse-error        malformed problem/input files

The environment variable HANGING_SURFACES_THREADS caps the worker pool
used by `check --all`; library operations themselves are pure and
sequential.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVE = 3
EXIT_IO = 4
EXIT_PARSE = 5


def _fail(kind: str, message: str, code: int, **extra) -> int:
    record = {"kind": kind, "message": message}
    record.update(extra)
    print(json.dumps(record), file=sys.stderr)
    return code


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _positive(name):
    def conv(text):
        v = float(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {v}")
        return v
    return conv


def cmd_dome(args) -> int:
    from . import profile_ode, surface

    cfg = profile_ode.IntegratorConfig(
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_step=args.max_step,
        seed_offset=args.seed_offset, slope_cap=args.slope_cap)
    profile = profile_ode.integrate_from_axis(args.u0, args.rmax, cfg)
    out = _outdir(args)
    profile_ode.save_profile(profile, out / "dome_profile.csv")
    mesh = surface.revolve_vertical(profile, args.ntheta)
    if args.invert_z is not None:
        mesh = surface.invert_about_plane(mesh, args.invert_z)
    surface.write_obj(mesh, out / "dome.obj")
    surface.write_stl(mesh, out / "dome.stl")
    stats = surface.singular_residual_sample(profile, "vertical")
    metrics = surface.mesh_metrics(mesh, stats)
    surface.write_metrics_csv(metrics, out / "dome_metrics.csv")
    record = {
        "u0": args.u0, "r_max": args.rmax, "n_theta": args.ntheta,
        "inverted_about": args.invert_z,
        "termination": profile.termination.kind.value,
        "termination_abscissa": profile.termination.abscissa,
        "area": metrics.area, "centroid_height": metrics.centroid_height,
        "residual_max": stats.max, "residual_mean": stats.mean,
        "provenance": mesh.provenance,
    }
    (out / "dome_metrics.json").write_text(json.dumps(record, indent=2))
    print(json.dumps(record))
    return EXIT_OK


def cmd_roof(args) -> int:
    from . import catenary, surface

    tc = catenary.two_catenary_build(args.umin, n_samples=args.samples,
                                     margin=args.margin)
    out = _outdir(args)
    catenary.save_two_catenary(tc, out / "roof_profile.csv")
    mesh = surface.revolve_horizontal(tc, (args.theta_min, args.theta_max),
                                      n_theta=args.ntheta)
    if args.clip_y is not None:
        mesh = surface.clip_y(mesh, args.clip_y[0], args.clip_y[1])
    if args.invert_z is not None:
        mesh = surface.invert_about_plane(mesh, args.invert_z)
    surface.write_obj(mesh, out / "roof.obj")
    surface.write_stl(mesh, out / "roof.stl")
    stats = surface.singular_residual_sample(
        tc.profile, "horizontal", theta_range=(args.theta_min, args.theta_max))
    metrics = surface.mesh_metrics(mesh, stats)
    surface.write_metrics_csv(metrics, out / "roof_metrics.csv")
    record = {
        "u_min": args.umin, "half_width": tc.half_width, "margin": tc.margin,
        "halfwidth_error_estimate": tc.halfwidth_quadrature.error_estimate,
        "theta_range": [args.theta_min, args.theta_max],
        "clip_y": args.clip_y, "inverted_about": args.invert_z,
        "footprint_x_extent": float(mesh.vertices[:, 0].max()
                                    - mesh.vertices[:, 0].min()),
        "area": metrics.area, "centroid_height": metrics.centroid_height,
        "residual_max": stats.max, "residual_mean": stats.mean,
        "provenance": mesh.provenance,
    }
    (out / "roof_metrics.json").write_text(json.dumps(record, indent=2))
    print(json.dumps(record))
    return EXIT_OK


def cmd_solve(args) -> int:
    from . import dirichlet

    try:
        prob = dirichlet.load_problem(args.problem)
    except FileNotFoundError as exc:
        return _fail("io-error", str(exc), EXIT_IO)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        return _fail("parse-error", f"malformed problem spec: {exc}", EXIT_PARSE)
    if args.residual_tol is not None or args.max_iters is not None:
        prob["cfg"] = dirichlet.NewtonConfig(
            max_iters=args.max_iters or prob["cfg"].max_iters,
            residual_tol=args.residual_tol or prob["cfg"].residual_tol)
    grid, report = dirichlet.solve(prob["phi"], prob["nx"], prob["ny"], prob["h"],
                                   prob["cfg"], x0=prob["x0"], y0=prob["y0"])
    out = _outdir(args)
    dirichlet.write_solution_csv(grid, out / "solution.csv")
    (out / "report.json").write_text(report.to_json())
    if report.converged:
        props = dirichlet.check_properties(grid)
        (out / "properties.json").write_text(props.to_json())
        print(report.to_json())
        return EXIT_OK
    # failed solve: explain via the necessary boundary condition
    ratio = grid.domain_area() / grid.boundary_length()
    max_phi = float(grid.boundary_values().max())
    return _fail("solve-failure", report.message, EXIT_SOLVE,
                 status=report.status,
                 residual_norm=report.residual_norm,
                 area_length_condition={
                     "area_over_perimeter": ratio,
                     "max_boundary": max_phi,
                     "satisfied": ratio < max_phi,
                 })


def cmd_example_cone(args) -> int:
    from . import variational

    out = _outdir(args)
    if args.sweep:
        r_values = args.R if args.R else [0.5, 0.2, 0.1, 0.05, 0.01]
        reports = variational.sweep_cone_family(r_values, n_r=args.nr,
                                                n_theta=args.ntheta)
        variational.write_cone_sweep_csv(reports, out / "cone_sweep.csv")
        payload = [rep.to_dict() for rep in reports]
        (out / "cone_sweep.json").write_text(json.dumps(payload, indent=2))
        print(json.dumps(payload))
    else:
        if not args.R:
            raise SystemExit("--R is required without --sweep")
        rep = variational.cone_family_centroid(args.R[0], n_r=args.nr,
                                               n_theta=args.ntheta)
        (out / "cone_report.json").write_text(json.dumps(rep.to_dict(), indent=2))
        print(json.dumps(rep.to_dict()))
    return EXIT_OK


def cmd_halfwidth(args) -> int:
    from . import catenary

    result = catenary.two_catenary_halfwidth(args.c, rel_tol=args.tol)
    print(json.dumps({
        "c": args.c,
        "halfwidth": result.value,
        "error_estimate": result.error_estimate,
        "levels": result.levels,
        "evaluations": result.evaluations,
    }))
    return EXIT_OK


def _check_battery():
    """Invariant battery for `check --all`: (name, callable) pairs, each
    returning a detail string and raising AssertionError on failure."""
    import numpy as np

    from . import catenary, dirichlet, profile_ode, surface, variational

    def axis_dilation():
        base = profile_ode.integrate_from_axis(1.0, 1.5)
        lam = 2.0
        scaled = profile_ode.integrate_from_axis(lam, 1.5 * lam)
        rr = np.linspace(0.05, 1.45, 25)
        err = np.abs(scaled.evaluate(lam * rr)[0] - lam * base.evaluate(rr)[0]).max() / lam
        assert err < 1e-9, err
        return f"max rel err {err:.2e}"

    def cone_exact():
        p = profile_ode.integrate_from_interior(1.0, 1.0, 1.0, 2.0)
        rr = np.linspace(1.0, 2.0, 21)
        err = np.abs(p.evaluate(rr)[0] - rr).max()
        assert err < 1e-8, err
        res = profile_ode.rotational_residual(1.0, 1.0, 1.0, 0.0)
        assert res == 0.0
        return f"max err {err:.2e}"

    def backward_never_reaches_axis():
        p = profile_ode.integrate_from_interior(2.0, 1.0, 0.0, 0.0)
        kind = p.termination.kind
        rstar = p.termination.abscissa
        assert kind != profile_ode.TerminationKind.REACHED_AXIS
        assert 0.0 < rstar < 2.0, rstar
        return f"{kind.value} at r*={rstar:.6f}"

    def halfwidth_value():
        res = catenary.two_catenary_halfwidth(1.0)
        assert abs(res.value - 1.31102877714606) < 1e-10
        assert res.error_estimate <= 1e-10 * res.value
        return f"a(1)={res.value:.10f}"

    def two_catenary_invariants():
        tc = catenary.two_catenary_build(1.0, n_samples=401)
        sym = np.abs(tc.profile.u - tc.profile.u[::-1]).max()
        assert sym < 1e-10, sym
        rel = np.abs(tc.first_integral_residual()
                     / np.maximum(1.0, tc.c**2 * tc.profile.u**4)).max()
        assert rel < 1e-12, rel
        assert np.all(tc.curvature_numerator() > 0)
        return f"symmetry {sym:.1e}, first-integral rel {rel:.1e}"

    def mesh_inversion():
        p = profile_ode.integrate_from_axis(1.0, 1.5)
        mesh = surface.revolve_vertical(p, 64)
        inv = surface.invert_about_plane(mesh, 2.0)
        da = abs(surface.mesh_area(inv) - surface.mesh_area(mesh))
        assert da < 1e-12 * surface.mesh_area(mesh), da
        twice = surface.invert_about_plane(inv, 2.0)
        assert np.abs(twice.vertices - mesh.vertices).max() < 1e-12
        return f"area delta {da:.1e}"

    def clip_monotone():
        tc = catenary.two_catenary_build(1.0, n_samples=201, margin=0.05)
        mesh = surface.revolve_horizontal(tc, n_theta=33)
        a3 = surface.mesh_area(surface.clip_y(mesh, -3, 3))
        a2 = surface.mesh_area(surface.clip_y(mesh, -2, 2))
        a1 = surface.mesh_area(surface.clip_y(mesh, -1, 1))
        assert a1 < a2 < a3 <= surface.mesh_area(mesh) + 1e-12
        return f"areas {a1:.3f} < {a2:.3f} < {a3:.3f}"

    def cylinder_residual():
        u, du, d2u = catenary.catenary_eval(1.0, 0.0, 0.7)
        res = d2u / (1 + du * du) - 1 / u
        assert abs(res) < 1e-14, res
        return f"residual {res:.1e}"

    def cone_family():
        reps = variational.sweep_cone_family([0.5, 0.1], n_r=48, n_theta=128)
        for rep in reps:
            assert abs(rep.area_mesh - 2 * math.pi) < 0.002 * 2 * math.pi
            assert abs(rep.cg_mesh - rep.cg_closed) < 0.002 * abs(rep.cg_closed)
        assert reps[1].cg_closed < reps[0].cg_closed
        return f"cg(0.5)={reps[0].cg_closed:.5f}, cg(0.1)={reps[1].cg_closed:.5f}"

    def dirichlet_properties():
        grid, report = dirichlet.solve(lambda X, Y: np.cosh(X), 33, 33, 2.0 / 32,
                                       x0=-1.0, y0=-1.0)
        assert report.converged, report.status
        props = dirichlet.check_properties(grid)
        assert props.all_pass
        err = np.abs(grid.values - np.cosh(grid.x[:, None])).max()
        assert err < 1e-3, err
        return f"converged in {report.iterations} iters, err {err:.1e}"

    def first_variation_gate():
        n = 65
        grid, report = dirichlet.solve(lambda X, Y: np.cosh(X), n, n, 2.0 / (n - 1),
                                       x0=-1.0, y0=-1.0)
        assert report.converged
        guess = dirichlet.harmonic_extension(np.cosh(grid.x[:, None])
                                             * np.ones((1, n)), grid.h)
        bad = dirichlet.GridFunction(n, n, grid.h, guess, -1.0, -1.0)
        worst_sol = 0.0
        worst_bad = 0.0
        for _, pert in variational.perturbation_battery(n, n):
            nrm = float(np.sqrt((pert**2).sum()) * grid.h)
            worst_sol = max(worst_sol, abs(variational.first_variation(grid, pert)) / nrm)
            worst_bad = max(worst_bad, abs(variational.first_variation(bad, pert)) / nrm)
        assert worst_sol < 1e-3, worst_sol
        assert worst_bad > 0.1, worst_bad
        return f"solution {worst_sol:.1e} vs non-solution {worst_bad:.1e}"

    return [
        ("axis dilation covariance", axis_dilation),
        ("cone exactness", cone_exact),
        ("backward run never reaches axis", backward_never_reaches_axis),
        ("half-width constant", halfwidth_value),
        ("2-catenary invariants", two_catenary_invariants),
        ("mesh inversion isometry", mesh_inversion),
        ("clip area monotonicity", clip_monotone),
        ("catenary cylinder residual", cylinder_residual),
        ("cone family reproduction", cone_family),
        ("Dirichlet solve properties", dirichlet_properties),
        ("first variation gate", first_variation_gate),
    ]


def cmd_check(args) -> int:
    from concurrent.futures import ThreadPoolExecutor

    checks = _check_battery()
    env = os.environ.get("HANGING_SURFACES_THREADS")
    workers = max(1, int(env)) if env else min(4, len(checks))
    results = []

    def run(item):
        name, fn = item
        try:
            return name, True, fn()
        except Exception as exc:  # noqa: BLE001 - report, don't crash
            return name, False, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for name, ok, detail in pool.map(run, checks):
            results.append((name, ok, detail))
            print(f"[{'ok' if ok else 'FAIL'}] {name}: {detail}")
    failures = [name for name, ok, _ in results if not ok]
    print(f"{len(results) - len(failures)}/{len(results)} checks passed "
          f"({workers} workers)")
    return EXIT_OK if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hanging-surfaces",
        description="Profiles, meshes, and PDE solves for surfaces hanging "
                    "under their own weight.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dome", help="vertical-axis dome from an axis-started profile")
    p.add_argument("--u0", type=_positive("u0"), required=True, help="apex height")
    p.add_argument("--rmax", type=_positive("rmax"), required=True, help="outer radius")
    p.add_argument("--ntheta", type=int, default=128)
    p.add_argument("--invert-z", type=float, default=None, metavar="Z",
                   help="reflect the mesh across the plane z = Z")
    p.add_argument("--rel-tol", type=_positive("rel-tol"), default=1e-10)
    p.add_argument("--abs-tol", type=_positive("abs-tol"), default=1e-12)
    p.add_argument("--max-step", type=_positive("max-step"), default=0.01)
    p.add_argument("--seed-offset", type=_positive("seed-offset"), default=None)
    p.add_argument("--slope-cap", type=_positive("slope-cap"), default=1e6)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_dome)

    p = sub.add_parser("roof", help="horizontal-axis roof from a 2-catenary")
    p.add_argument("--umin", type=_positive("umin"), required=True)
    p.add_argument("--theta-min", type=float, default=-math.pi / 2)
    p.add_argument("--theta-max", type=float, default=math.pi / 2)
    p.add_argument("--clip-y", type=float, nargs=2, default=None, metavar=("A", "B"))
    p.add_argument("--invert-z", type=float, default=None, metavar="Z")
    p.add_argument("--samples", type=int, default=801)
    p.add_argument("--margin", type=_positive("margin"), default=None)
    p.add_argument("--ntheta", type=int, default=65)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_roof)

    p = sub.add_parser("solve", help="Dirichlet solve from a JSON problem spec")
    p.add_argument("--problem", required=True)
    p.add_argument("--residual-tol", type=_positive("residual-tol"), default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("example-cone",
                       help="constant-area cone family and its center of gravity")
    p.add_argument("--R", type=float, action="append", default=None)
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--nr", type=int, default=48)
    p.add_argument("--ntheta", type=int, default=128)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_example_cone)

    p = sub.add_parser("halfwidth", help="half-width a(c) of the 2-catenary domain")
    p.add_argument("--c", type=_positive("c"), required=True)
    p.add_argument("--tol", type=_positive("tol"), default=1e-12)
    p.set_defaults(func=cmd_halfwidth)

    p = sub.add_parser("check", help="run the module invariant battery")
    p.add_argument("--all", action="store_true", required=True)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    from .errors import (BadBoundaryError, EmptyMeshError, InvalidParameterError,
                         InvalidRegimeError, SingularInputError)

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParameterError, SingularInputError, BadBoundaryError,
            EmptyMeshError, SystemExit) as exc:
        if isinstance(exc, SystemExit):
            if exc.code in (0, None):
                return 0
            if isinstance(exc.code, int):
                return exc.code
            return _fail("invalid-argument", str(exc.code), EXIT_INVALID)
        return _fail("invalid-argument", str(exc), EXIT_INVALID)
    except InvalidRegimeError as exc:
        return _fail("solve-failure", str(exc), EXIT_SOLVE)
    except OSError as exc:
        return _fail("io-error", str(exc), EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
