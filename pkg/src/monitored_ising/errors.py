"""Exception hierarchy shared by all modules."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SimulationError, ValueError):
    """Invalid value for a model or operation parameter."""


class DomainError(ParameterError):
    """Parameter outside the mathematical domain of a formula."""


class ContractError(SimulationError):
    """An operation was called in a way that violates its contract."""


class ConfigurationError(SimulationError):
    """A run configuration is inconsistent or unsafe (e.g. time step too large)."""


class CorruptedStateError(SimulationError):
    """Numerical invariants of a state or matrix were violated beyond tolerance."""


class InfeasibleJumpError(CorruptedStateError):
    """A quantum jump was requested on a site with vanishing jump probability."""


class InsufficientDataError(SimulationError):
    """Not enough data points inside the requested window to perform a fit."""
