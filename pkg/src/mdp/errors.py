class TTQLError(Exception):
    """Base class for every error raised by the library."""


class InvalidArgumentError(TTQLError, ValueError):
    """Raised for shape mismatches, bad indices and infeasible parameters."""


class NonConvergenceError(TTQLError, RuntimeError):
    """Raised when value iteration hits its iteration cap."""


class OutOfRegimeError(InvalidArgumentError):
    """Raised when a closed-form coefficient bound is asked for outside 0 <= gamma*beta < 1."""


class ConfigError(InvalidArgumentError):
    """Raised for unreadable or invalid experiment configuration."""
