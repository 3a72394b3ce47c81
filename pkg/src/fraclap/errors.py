"""Exception hierarchy shared by all fraclap modules."""


class FraclapError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(FraclapError):
    """Invalid user input: unknown family, malformed expression, bad options."""


class GeometryError(FraclapError):
    """Mesh construction failure: dedup ambiguity, unmatched vertices."""


class AssemblyError(FraclapError):
    """Operator/load assembly failure: measure-mesh mismatch, degenerate element."""


class SolveError(FraclapError):
    """Linear solve failure: singular system, non-convergence, residual violation."""
