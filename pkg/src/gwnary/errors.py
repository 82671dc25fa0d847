"""Exception types raised across the package."""


class GWNaryError(Exception):
    """Base class for all package errors."""


class DomainError(GWNaryError, ValueError):
    """An argument lies outside the domain of the operation."""


class SpecError(GWNaryError, ValueError):
    """An offspring specification is malformed or violates an assumption."""


class InvalidToleranceError(GWNaryError, ValueError):
    pass


class NonConvergenceError(GWNaryError, RuntimeError):
    pass


class InconsistencyError(GWNaryError, RuntimeError):
    """A computed quantity contradicts a property that must hold for a valid root."""


class NoSignChangeError(GWNaryError, ValueError):
    """Both ends of a parameter range give the same degenerate/non-degenerate answer."""


class DegenerateRootError(GWNaryError, ValueError):
    """Conditional survival is undefined for this root."""


class WindowTooSmallError(GWNaryError, ValueError):
    pass


class ClassMismatchError(GWNaryError, ValueError):
    pass


class DegenerateEstimateError(GWNaryError, RuntimeError):
    """Too many Monte Carlo trials hit the node budget for the estimate to be trusted."""
