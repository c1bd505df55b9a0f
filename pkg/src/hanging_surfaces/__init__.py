"""Surfaces hanging under their own weight: generating-curve integration,
triangle meshing, Dirichlet solves, and center-of-gravity diagnostics.

Subpackages
-----------
profile_ode   vertical-axis rotational profiles (singular axis start,
              blow-up detection)
catenary      catenaries, 2-catenaries, and the half-width quadrature
surface       meshes of revolution, inversion, clipping, exports
dirichlet     finite-difference Newton solve of the graph equation
variational   hanging energy, first variation, cone-annulus family
quadrature    tanh-sinh rule for endpoint singularities
"""
from .catenary import (Catenary, TwoCatenary, catenary_eval,
                       two_catenary_build, two_catenary_halfwidth)
from .errors import (BadBoundaryError, EmptyMeshError, HangingSurfacesError,
                     InvalidParameterError, InvalidRegimeError, SingularInputError)
from .profile_ode import (IntegratorConfig, Profile, Termination, TerminationKind,
                          integrate_from_axis, integrate_from_interior,
                          rotational_residual)
from .quadrature import QuadratureResult, tanh_sinh
from .surface import (MeshMetrics, SurfaceMesh, catenary_cylinder, clip_y,
                      cone_annulus_mesh, invert_about_plane, mesh_area,
                      mesh_centroid_height, mesh_metrics, revolve_horizontal,
                      revolve_vertical, singular_residual_sample, write_obj,
                      write_stl)

__version__ = "0.1.0"

# scipy-backed modules load on first use (PEP 562) so profile/mesh work and
# the CLI keep their fast startup
_LAZY = {
    "GridFunction": "dirichlet", "NewtonConfig": "dirichlet",
    "PropertyReport": "dirichlet", "SolveReport": "dirichlet",
    "check_properties": "dirichlet", "pde_residual": "dirichlet",
    "solve": "dirichlet",
    "ConeAnnulusSurface": "variational", "cone_family_centroid": "variational",
    "first_variation": "variational", "functional_J": "variational",
    "perturbation_battery": "variational", "sweep_cone_family": "variational",
}


def __getattr__(name):
    if name in _LAZY:
        import importlib

        module = importlib.import_module(f".{_LAZY[name]}", __name__)
        value = getattr(module, name)
        globals()[name] = value
        return value
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_LAZY))
