"""Exception hierarchy shared by all modules.

Invalid *inputs* raise; legitimate numerical outcomes (a Newton solve that
fails to converge, a profile that blows up) are reported as structured
results instead, because they are answers, not bugs.
"""


class HangingSurfacesError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(HangingSurfacesError, ValueError):
    """A parameter violates its documented precondition."""


class SingularInputError(HangingSurfacesError, ValueError):
    """An evaluation point sits on a singularity of the governing equation
    (r = 0 or u = 0 for the rotational equation, a = 0 for a catenary)."""


class InvalidRegimeError(HangingSurfacesError, ArithmeticError):
    """The integration entered the degenerate regime u <= 0 that the
    equations do not cover."""


class EmptyMeshError(HangingSurfacesError, ValueError):
    """A mesh operation produced (or received) a mesh with no triangles."""


class BadBoundaryError(HangingSurfacesError, ValueError):
    """Dirichlet boundary data is invalid (non-positive somewhere)."""
