"""Exception types shared across the package."""

from __future__ import annotations


class DimensionError(ValueError):
    """An operand has the wrong shape for the requested operation."""


class ConfigurationError(ValueError):
    """A model, rule, or experiment configuration is invalid."""


class GainStabilityError(ConfigurationError):
    """An injection gain fails the closed-loop stability requirement."""


class TraceFormatError(ValueError):
    """A trace file does not conform to the documented CSV layout."""


class SimulationAbort(RuntimeError):
    """The integrator produced a non-finite value and the run was stopped.

    Attributes:
        time: simulation time at which the abort was detected.
        component: name of the first offending state component.
    """

    def __init__(self, time: float, component: str):
        super().__init__(
            f"simulation aborted at t={time:.6g}: non-finite value in component '{component}'"
        )
        self.time = time
        self.component = component
