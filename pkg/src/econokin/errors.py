"""Exception types raised across the package."""


class EconokinError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(EconokinError, ValueError):
    pass


class DomainError(EconokinError, ValueError):
    pass


class DivergentIntegralError(EconokinError, ArithmeticError):
    pass


class QuadratureError(EconokinError, ArithmeticError):
    pass


class NoPowerTailError(EconokinError, ValueError):
    pass


class EmptyGroupError(EconokinError, ValueError):
    pass


class DegenerateInputError(EconokinError, ValueError):
    """Input carries no usable mass (all-zero incomes, zero-count tables, ...)."""


class FitError(EconokinError, RuntimeError):
    pass


class SingularJacobianError(FitError):
    pass


class BoundViolationError(FitError, ValueError):
    pass


class ParseError(EconokinError, ValueError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class MonotonicityError(ParseError):
    pass
