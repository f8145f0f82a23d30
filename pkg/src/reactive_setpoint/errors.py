"""Exception types raised by the simulator and its checks."""


class SimError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(SimError, ValueError):
    pass


class InvalidConfiguration(SimError, ValueError):
    """A configuration value violates a documented invariant.

    ``key`` names the offending configuration path when known.
    """

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class GridLost(SimError, ArithmeticError):
    """Grid-voltage magnitude fell below the usable floor."""


class SimulationDiverged(SimError, RuntimeError):
    """The plant left its valid region (DC-link collapse)."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (plant step {step})"
        super().__init__(message)


class Infeasible(SimError, ValueError):
    """The feasible interval is empty."""


class AssumptionViolated(SimError, RuntimeError):
    """Inner loop is not exponentially stable at this operating point."""


class NoContraction(SimError, ValueError):
    pass


class InsufficientTimescaleSeparation(SimError, ValueError):
    pass
