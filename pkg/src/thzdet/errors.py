"""Exception types raised across the package."""


class ThzdetError(Exception):
    """Base class for all package errors."""


class RankDeficient(ThzdetError):
    """A pivot norm fell below the rank tolerance."""


class NonConvergence(ThzdetError):
    """An iterative routine exceeded its iteration cap."""


class TooLarge(ThzdetError):
    """An exhaustive enumeration exceeds the configured guard."""


class NotPSD(ThzdetError):
    """A matrix expected to be positive semidefinite is not."""


class ConfigInvalid(ThzdetError, ValueError):
    """A configuration is inconsistent or malformed."""


class SolverFailure(ThzdetError):
    """A nonlinear solve did not reach the required residual."""


class QuadratureFailure(ThzdetError):
    """Numerical integration did not reach the requested accuracy."""


class NonInteger(ThzdetError, ValueError):
    """A FLOPs polynomial evaluated to a non-integer count."""


class UnknownScheme(ThzdetError, ValueError):
    """An unrecognised detector or scheme name."""


class DomainError(ThzdetError, ValueError):
    """Arguments fall outside the domain of a closed-form expression."""
