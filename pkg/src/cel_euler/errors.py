"""Exception types raised across the package."""


class CelError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CelError, ValueError):
    """Inputs are structurally invalid (grid too small, mismatched grids, bad config)."""


class DomainError(CelError, ValueError):
    """A numeric argument lies outside the admissible range of an operation."""


class PreconditionError(CelError, ValueError):
    """Sampled inputs violate a stated precondition (e.g. a non-monotone alpha)."""


class CFLError(CelError, ValueError):
    """The time step violates the CFL bound; ``suggested_dt`` satisfies it."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class InstabilityError(CelError, RuntimeError):
    """Non-finite values appeared while stepping; ``last_good_time`` is the last clean state."""

    def __init__(self, message, last_good_time):
        super().__init__(message)
        self.last_good_time = last_good_time
