"""Exception hierarchy shared by all sqzom modules."""


class SqzomError(Exception):
    """Base class for library errors."""

    kind = "error"


class DomainError(SqzomError, ValueError):
    """An argument lies outside the domain of an operation."""

    kind = "domain"


class InvariantViolation(SqzomError, ArithmeticError):
    """A computed object failed one of its physical invariants."""

    kind = "invariant"


class InstabilityError(SqzomError, ArithmeticError):
    """The requested operating point is dynamically unstable."""

    kind = "instability"


class UnsupportedConfiguration(SqzomError, ValueError):
    kind = "unsupported"


class FitError(SqzomError, RuntimeError):
    """A least-squares fit failed to converge.

    ``diagnostics`` carries the optimizer status, message and last iterate.
    """

    kind = "fit"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IntegrationError(SqzomError, ArithmeticError):
    kind = "integration"


class ConfigError(SqzomError, ValueError):
    kind = "config"
