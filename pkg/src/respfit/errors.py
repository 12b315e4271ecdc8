"""Exception hierarchy shared across the toolkit."""


class RespfitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(RespfitError):
    """An experiment configuration is invalid; the message names the field."""


class SolverError(RespfitError):
    """Base class for numerical failures (integration, root finding, fitting)."""


class InvalidGridError(SolverError):
    """The requested interval is not an integer number of steps."""


class NonFiniteError(SolverError):
    """The integrated state overflowed or became NaN (trajectory blow-up)."""


class NoRootError(SolverError):
    """The equilibrium equation has no sign change on the search bracket."""


class OutOfDomainError(SolverError):
    """A trajectory or history was evaluated outside its time domain."""


class SingularNormalEquationsError(SolverError):
    """The damped normal equations stayed singular at maximum damping."""
