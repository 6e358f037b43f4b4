"""Exception types raised across the package."""


class IsiRateError(Exception):
    """Base class for all errors raised by :mod:`isirate`."""


class RejectedInput(IsiRateError, ValueError):
    """Input violates a precondition (ordering, range, configuration)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InsufficientData(IsiRateError, ValueError):
    """Sample too small for the requested statistic."""


class NonFiringRegime(IsiRateError, RuntimeError):
    """Simulation exhausted its step budget without producing a spike."""

    def __init__(self, message, budget):
        super().__init__(message)
        self.budget = budget


class DivergentQuantity(IsiRateError, ArithmeticError):
    """A closed-form quantity is infinite for the given parameters."""


class ParseError(IsiRateError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
