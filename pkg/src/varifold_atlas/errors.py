"""Exception hierarchy. The CLI maps these onto exit codes."""


class VarifoldAtlasError(Exception):
    """Base class for all package errors."""


class InputError(VarifoldAtlasError):
    """Malformed configuration or curve data (CLI exit code 2)."""


class GeometryError(VarifoldAtlasError):
    """Geometric precondition violated: tangency, degeneracy, bad mesh
    parameters (CLI exit code 2)."""


class TangencyError(GeometryError):
    """Curves touch tangentially or cross below the transversality
    tolerance."""


class ConsistencyError(VarifoldAtlasError):
    """Internal invariant violated (Euler formula, checkerboard property,
    seam bookkeeping).  Signals a numerical failure upstream, not bad
    input."""


class VerificationError(VarifoldAtlasError):
    """A verification check failed (CLI exit code 1)."""
