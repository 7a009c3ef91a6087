"""Exception types raised across the package."""


class DPRegressionError(Exception):
    """Base class for all package errors."""


class InvalidValue(DPRegressionError, ValueError):
    pass


class BudgetExceeded(DPRegressionError):
    pass


class InvalidBudget(DPRegressionError, ValueError):
    pass


class DegenerateX(DPRegressionError):
    """All explanatory values are equal, so nvar(x) = 0."""


class TooFewPoints(DPRegressionError, ValueError):
    pass


class NoValidPairs(DPRegressionError):
    """Every matched pair was vertical (x_l == x_j)."""


class EmptyInput(DPRegressionError, ValueError):
    pass


class InvalidRange(DPRegressionError, ValueError):
    pass


class EmptyFamily(DPRegressionError, ValueError):
    pass


class AllFailures(DPRegressionError):
    pass


class ZeroStandardError(DPRegressionError):
    pass


class ConfigError(DPRegressionError, ValueError):
    pass


class ParseError(DPRegressionError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
