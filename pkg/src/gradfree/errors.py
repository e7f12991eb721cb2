"""Exception hierarchy shared by every module of the package."""


class GradFreeError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(GradFreeError, ValueError):
    pass


class DegenerateBox(GradFreeError, ValueError):
    pass


class InvalidBox(GradFreeError, ValueError):
    pass


class InvalidInterval(GradFreeError, ValueError):
    pass


class DimensionTooSmall(GradFreeError, ValueError):
    pass


class NonFiniteValue(GradFreeError, ArithmeticError):
    """Raised when an oracle returns NaN/inf or an iterate diverges."""


class BudgetExceeded(GradFreeError, RuntimeError):
    pass


class ConfigError(GradFreeError, ValueError):
    pass
