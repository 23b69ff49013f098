"""Exception hierarchy shared by every module."""


class OgmLabError(Exception):
    """Base class for all package errors."""


class UsageError(OgmLabError, ValueError):
    """Invalid arguments or violated preconditions."""


class DimensionMismatchError(UsageError):
    """Operands of incompatible dimension."""


class NotPositiveDefiniteError(UsageError):
    """A matrix that must be symmetric positive definite is not."""


class DomainError(UsageError):
    """A scalar parameter lies outside the domain of a formula."""


class NoMinimizerError(OgmLabError):
    """The objective has no minimizer."""


class ReferenceUnavailableError(OgmLabError):
    """A reference solution could not be computed to the requested accuracy."""


class CertificateUnavailableError(OgmLabError):
    """A certificate needs a reference solution the oracle does not carry."""


class ScheduleInvalidError(OgmLabError):
    """A parameter sequence violates its defining constraint.

    Attributes
    ----------
    k : int
        First offending index.
    """

    def __init__(self, message, k):
        super().__init__(f"{message} (first offending k = {k})")
        self.k = k


class DivergenceError(OgmLabError):
    """A method produced a non-finite value.

    Attributes
    ----------
    k : int
        Iteration index at which the non-finite value appeared.
    trace : object or None
        Partial trace recorded before the failure, attached by ``run``.
    """

    def __init__(self, message, k):
        super().__init__(f"{message} at iteration {k}")
        self.k = k
        self.trace = None


class DatasetParseError(OgmLabError):
    """A dataset row could not be parsed."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(OgmLabError):
    """An experiment configuration is unreadable or invalid."""
