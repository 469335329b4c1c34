"""Adaptive state observer driven by the active subsystem's estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, GainStabilityError
from .estimator import DremEstimator
from .linalg import as_vector, hurwitz_verdict
from .plant import PlantModel


class ObserverState:
    """Observer estimate with output-injection gain (checked stable).

    The default initial estimate is the zero vector.
    """

    def __init__(self, gain, model: PlantModel, x_hat=None):
        gain = as_vector(gain, "observer gain")
        if gain.shape != (model.n,):
            raise DimensionError(
                f"observer gain must have length {model.n}, got {gain.shape}"
            )
        a_closed = model.a - np.outer(gain, model.c)
        verdict = hurwitz_verdict(a_closed)
        if not verdict.stable:
            kind = "indeterminate (marginal)" if verdict.indeterminate else "unstable"
            raise GainStabilityError(
                f"observer gain {gain.tolist()} gives an {kind} closed-loop matrix"
            )
        self.gain = gain
        self.a_closed = a_closed
        if x_hat is None:
            self.x_hat = np.zeros(model.n)
        else:
            x_hat = as_vector(x_hat, "observer state")
            if x_hat.shape != (model.n,):
                raise DimensionError(f"observer state must have length {model.n}")
            self.x_hat = x_hat.copy()


def observer_derivative(
    obs: ObserverState,
    model: PlantModel,
    est: DremEstimator,
    measured_output: float,
    u: float,
    active: int,
) -> np.ndarray:
    """Observer right-hand side: model copy driven by the active estimate
    plus output injection of the measurement discrepancy."""
    if not 1 <= active <= est.s:
        raise ConfigurationError(f"subsystem index {active} outside 1..{est.s}")
    psi = model.psi(measured_output, u)
    y_hat = float(model.c @ obs.x_hat)
    return (
        model.a @ obs.x_hat
        + model.b * u
        + psi @ est.theta_hat[active - 1]
        + obs.gain * (measured_output - y_hat)
    )


@dataclass(frozen=True)
class ErrorMetrics:
    """Per-grid-point estimation error norms with activity annotation."""

    time: np.ndarray
    x_error: np.ndarray
    theta_error: np.ndarray  # (s, T)
    active: np.ndarray  # (s, T) bool


def error_metrics(trace, model: PlantModel) -> ErrorMetrics:
    """Recompute error norms from a trace and the ground-truth parameters."""
    if (trace.n, trace.m, trace.num_subsystems) != (model.n, model.m, model.s):
        raise DimensionError(
            "trace dimensions do not match the model "
            f"(trace n/m/s = {trace.n}/{trace.m}/{trace.num_subsystems})"
        )
    x_err = np.linalg.norm(trace.xhat - trace.x, axis=1)
    theta = trace.theta_hat  # (T, s, m)
    diff = theta - model.true_params[None, :, :]
    theta_err = np.linalg.norm(diff, axis=2).T  # (s, T)
    active = np.stack([trace.sigma == i + 1 for i in range(model.s)])
    return ErrorMetrics(time=trace.t, x_error=x_err, theta_error=theta_err, active=active)
