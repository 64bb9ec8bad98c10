"""Exception hierarchy shared across the toolkit."""


class GridGfvError(Exception):
    """Base class for all errors raised by this package."""


class CaseError(GridGfvError):
    """Malformed or semantically unusable case data."""


class ConvergenceError(GridGfvError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, message, iterations=None, mismatch=None):
        super().__init__(message)
        self.iterations = iterations
        self.mismatch = mismatch


class SingularMatrixError(GridGfvError):
    """A matrix that must be invertible is singular or near-singular."""


class StabilityRegionError(GridGfvError):
    """Operating point leaves the small-signal stability region
    (some branch angle spread reaches 90 degrees)."""


class DisconnectedNetworkError(GridGfvError):
    """Analysis requires a connected network and the case is not."""


class SimulationUnstableError(GridGfvError):
    """Time-domain integration produced a non-finite state."""

    def __init__(self, message, first_time=None):
        super().__init__(message)
        self.first_time = first_time
