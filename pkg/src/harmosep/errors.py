"""Exception hierarchy shared across the package."""


class HarmosepError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(HarmosepError):
    """Input data is structurally invalid (codec, header, shape)."""


class DomainError(HarmosepError):
    """An argument violates a documented precondition."""


class ConfigError(HarmosepError):
    """Configuration values are inconsistent or out of range."""


class OptimizationError(HarmosepError):
    """The objective produced a non-finite value during minimization.

    Carries the last valid iterate so callers can recover.
    """

    def __init__(self, message, best_x=None, best_f=None):
        super().__init__(message)
        self.best_x = best_x
        self.best_f = best_f
