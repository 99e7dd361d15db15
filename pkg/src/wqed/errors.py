"""Exception types shared across the library."""


class WqedError(Exception):
    """Base class for all library-specific failures."""


class InvalidWidth(WqedError):
    """A packet width (or other scale parameter) is not strictly positive."""


class GridTooNarrow(WqedError):
    """A frequency grid cannot support the requested object or operation."""


class StepTooLarge(WqedError):
    """An integration step or horizon violates a documented stability guard."""


class BudgetExceeded(WqedError):
    """A requested discretization exceeds the configured size budget."""


class NonPhysicalState(WqedError):
    """A density matrix violates hermiticity, trace or positivity bounds."""


class InvalidWindow(WqedError):
    """A correlation window requests times before the reference time."""


class ConfigError(WqedError):
    """A run configuration failed validation before any computation."""
