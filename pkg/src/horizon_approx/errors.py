"""Exception hierarchy shared by every module."""


class HorizonApproxError(Exception):
    """Base class for all package errors."""


class DomainError(HorizonApproxError, ValueError):
    """Argument outside the mathematical domain (x <= 0, y <= 0, t > T, ...)."""


class ConstructionError(HorizonApproxError, ValueError):
    """Invalid parameters passed to a constructor."""


class CapabilityError(HorizonApproxError, NotImplementedError):
    """Requested derivative order (or evaluation mode) is not available."""


class SingularityError(HorizonApproxError, ArithmeticError):
    """A denominator such as U_xx vanished."""


class ConcavityError(SingularityError):
    """The value surrogate lost concavity in wealth where a portfolio is formed."""


class SimulationError(HorizonApproxError, RuntimeError):
    """Non-finite state encountered while simulating."""


class ConfigError(HorizonApproxError, ValueError):
    """Malformed experiment configuration."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
