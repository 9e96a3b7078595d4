"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class CutoffExceeded(SimulationError):
    """An operation would populate a Fock state beyond the truncation."""


class ConvergenceFailure(SimulationError):
    pass


class UnsupportedState(SimulationError):
    pass


class NotUnitary(SimulationError):
    pass


class OutOfValidity(SimulationError):
    """Parameters lie outside the regime where a perturbative model holds."""


class InvalidPattern(SimulationError):
    pass


class ZeroProbabilityOutcome(SimulationError):
    pass


class ConfigError(SimulationError):
    pass
