"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: parameter/domain problems exit with 2,
convergence/window/fit failures exit with 3.
"""


class CbmlabError(Exception):
    """Base class for all package errors."""


class ParameterError(CbmlabError, ValueError):
    """A parameter violates a documented precondition."""


class DomainError(ParameterError):
    """Data falls outside the computational domain or admissible range."""


class GridLookupError(ParameterError):
    """A requested time or position is not on the stored grid."""


class WindowError(CbmlabError):
    """A fit or report window is outside the validity range of the data."""


class ConvergenceError(CbmlabError):
    """A refinement or self-consistency check failed to converge."""


class FitError(CbmlabError):
    """A regression problem is degenerate."""
