"""Exception hierarchy shared by all thermolyap modules."""


class ThermolyapError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ThermolyapError):
    """Invalid parameter, configuration key, or violated construction bound."""


class DomainError(ThermolyapError):
    """State outside the admissible region of an equation of state or grid."""


class ShapeError(ThermolyapError):
    """Array length or grid mismatch between operands."""


class EvaluationError(ThermolyapError):
    """A function returned a non-finite value where a finite one was required."""


class InversionError(ThermolyapError):
    """A scalar root find (pressure or energy inversion) failed to converge."""


class DegenerateDirectionError(ThermolyapError):
    """Probe directions produced a singular system for multiplier recovery."""


class FormatError(ThermolyapError):
    """Malformed snapshot or time-series file."""


class TimeStepError(ThermolyapError):
    """A time step produced a non-positive density or temperature."""


class SimulationAbortedError(ThermolyapError):
    """Repeated time-step failures; carries the last valid state."""

    def __init__(self, message, last_state=None, t=None):
        super().__init__(message)
        self.last_state = last_state
        self.t = t
