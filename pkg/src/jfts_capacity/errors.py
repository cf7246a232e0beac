"""Exception hierarchy shared by the numerical modules and the CLI."""


class JftsError(Exception):
    """Base class for all package errors."""


class DomainError(JftsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """A function was evaluated exactly at one of its poles."""


class RangeError(JftsError, OverflowError):
    """An argument lies beyond the guarded evaluation range."""


class ConfigurationError(JftsError, ValueError):
    """Parameters are individually valid but unusable together."""


class NumericError(JftsError, ArithmeticError):
    """A numerical procedure failed to converge or lost accuracy.

    ``diagnostics`` carries whatever the failing routine knew at the time.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NoRootError(NumericError):
    """No sign change of the residual was found in the search range."""


class NoCapacityError(NumericError):
    """A maximisation found no admissible point."""


class ModelError(NumericError):
    """The channel density is unusable for the requested operation."""
