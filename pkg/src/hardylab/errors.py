"""Exception types shared across the package."""


class HardyLabError(Exception):
    """Base class for all package errors."""


class DomainError(HardyLabError, ValueError):
    """An argument lies outside the domain of a function or a precondition fails."""


class UnsupportedTailError(HardyLabError, ValueError):
    """The requested operation is not defined for this weight tail."""


class GeometryError(HardyLabError, ValueError):
    """Invalid geometry, or a point/region outside the domain."""


class QuadratureError(HardyLabError, RuntimeError):
    """Adaptive refinement stalled before reaching the requested tolerance."""


class BudgetTooSmallError(HardyLabError, RuntimeError):
    """Monte Carlo relative standard error exceeds the allowed ceiling."""


class DivergenceError(HardyLabError, ArithmeticError):
    """A weighted integral is infinite or exceeds the divergence ceiling."""

    def __init__(self, message, value=float("inf")):
        super().__init__(message)
        self.value = value


class DegenerateFamilyError(HardyLabError, RuntimeError):
    """Every sampled member of a parametric family gave a zero ratio."""


class ZeroSeminormError(DomainError):
    """A constant is undefined because the reference seminorm vanishes."""


class ConfigError(HardyLabError, ValueError):
    """Invalid command-line or config-file input; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
