"""Exception hierarchy shared by the solver modules."""


class RelBGKError(Exception):
    """Base class for all solver errors."""


class DomainError(RelBGKError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class OutOfRangeError(RelBGKError, ValueError):
    """Inverse temperature beyond the configured cap (near-cold limit)."""


class ConfigurationError(RelBGKError, ValueError):
    """Invalid grid, boundary or solver configuration."""


class NumericalInputError(RelBGKError, ValueError):
    """Non-finite values handed to a quadrature."""


class ShapeError(RelBGKError, ValueError):
    """Fields defined on different grids."""


class DegeneracyError(RelBGKError):
    """Particle four-flow is not timelike (``N0^2 <= |N|^2``)."""

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"slab node {index}: {message}")
        self.index = index


class MatchingError(RelBGKError):
    """Inverse-energy ratio outside (0, 1); no inverse temperature matches."""

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"slab node {index}: {message}")
        self.index = index


class HypothesisViolationError(RelBGKError):
    """Boundary data violate the existence hypothesis (``a_l > 0``)."""


class InfeasibleConfigurationError(RelBGKError):
    """No admissible collision frequency above the search floor."""


class ConvergenceError(RelBGKError):
    """Picard iteration did not reach the tolerance."""

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class InvariantBreachError(RelBGKError):
    """An iterate left the solution set although ``w < eps``."""
