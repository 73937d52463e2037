"""Exception hierarchy shared by all modules."""


class SurfDecayError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SurfDecayError, ValueError):
    """An argument lies outside the domain where the formula is defined."""


class GeometryViolation(SurfDecayError, ValueError):
    """The requested well minimum is incompatible with C3 and the depth."""


class NoDistinctExtrema(SurfDecayError, ValueError):
    """The potential has no separate barrier peak and well minimum."""


class ConvergenceFailure(SurfDecayError, RuntimeError):
    pass


class GridTooCoarse(SurfDecayError, RuntimeError):
    pass


class GridMismatch(SurfDecayError, ValueError):
    pass


class NonRadiativePair(SurfDecayError, ValueError):
    """Transition frequency is not positive, so there is no emission channel."""


class BasisMismatch(SurfDecayError, ValueError):
    pass


class StiffnessFailure(SurfDecayError, RuntimeError):
    pass


class ConfigError(SurfDecayError, ValueError):
    pass
