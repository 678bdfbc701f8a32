"""Exceptions raised by the simulator.

Everything derives from ValueError so callers that only care about "bad
input" can catch one thing. Numerical fallbacks (pseudo-inverse, ridge)
never raise; they are recorded on the returned objects instead.
"""


class SimulationError(ValueError):
    """Base class for simulator errors."""


class ConfigurationError(SimulationError):
    """Invalid dimensions, physical parameters or config file content."""

    def __init__(self, message, path=None, lineno=None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.lineno = lineno

    def __str__(self):
        if self.path is not None and self.lineno is not None:
            return f"{self.path}:{self.lineno}: {self.message}"
        if self.path is not None:
            return f"{self.path}: {self.message}"
        return self.message


class DegenerateChannelError(SimulationError):
    """The channel carries no energy (all-zero estimate or zero gains)."""


class PowerBudgetError(SimulationError):
    """The common stream leaves no power for the private streams."""


class DomainError(SimulationError):
    """An argument lies outside the domain of a formula."""
