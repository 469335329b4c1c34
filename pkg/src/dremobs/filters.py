"""Per-gain auxiliary filter bank and regressor assembly.

Each unit filters the plant input/output through its own injection gain and
additionally integrates the response of the nonlinearity and the transition
factor of its closed-loop matrix.  All units restart from the same reset
state (zero filters, identity transition factor) at the initial instant and
at every switching instant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, GainStabilityError
from .linalg import as_vector, hurwitz_verdict
from .plant import PlantModel


class FilterUnit:
    """One auxiliary filter: injected-output state ``xu``, nonlinearity
    response ``upsilon``, and transition factor ``phi``."""

    def __init__(self, gain, model: PlantModel):
        gain = as_vector(gain, "filter gain")
        if gain.shape != (model.n,):
            raise DimensionError(
                f"filter gain must have length {model.n}, got {gain.shape}"
            )
        a_closed = model.a - np.outer(gain, model.c)
        verdict = hurwitz_verdict(a_closed)
        if not verdict.stable:
            kind = "indeterminate (marginal)" if verdict.indeterminate else "unstable"
            raise GainStabilityError(
                f"gain {gain.tolist()} gives an {kind} closed-loop matrix"
            )
        self.gain = gain
        self.a_closed = a_closed
        self.n = model.n
        self.m = model.m
        self.xu = np.zeros(model.n)
        self.upsilon = np.zeros((model.n, model.m))
        self.phi = np.eye(model.n)

    def reset(self) -> None:
        """Restart state: zero filters, identity transition factor."""
        self.xu[:] = 0.0
        self.upsilon[:] = 0.0
        self.phi[:] = np.eye(self.n)


def filter_derivative(
    unit: FilterUnit, model: PlantModel, measured_output: float, u: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rates for (xu, upsilon, phi); the nonlinearity is evaluated at the
    same measured output that drives xu."""
    psi = model.psi(measured_output, u)
    dxu = unit.a_closed @ unit.xu + model.b * u + unit.gain * measured_output
    dups = unit.a_closed @ unit.upsilon + psi
    dphi = unit.a_closed @ unit.phi
    return dxu, dups, dphi


def reset_filters(units: list[FilterUnit]) -> None:
    for unit in units:
        unit.reset()


def regressor_row(
    unit: FilterUnit, measured_output: float, model: PlantModel
) -> tuple[float, np.ndarray]:
    """Scalar regression output z and its regressor row [C upsilon, C phi]."""
    z = measured_output - float(model.c @ unit.xu)
    nu = np.concatenate([model.c @ unit.upsilon, model.c @ unit.phi])
    return z, nu


@dataclass(frozen=True)
class RegressorStack:
    """Stacked scalar regressions: zf = nt @ (augmented parameter).

    Row j of ``nt`` is the regressor row of unit j; ``zf`` collects the
    matching scalar outputs.
    """

    zf: np.ndarray
    nt: np.ndarray

    def __post_init__(self):
        zf = np.asarray(self.zf, dtype=float)
        nt = np.asarray(self.nt, dtype=float)
        k = zf.shape[0]
        if nt.shape != (k, k):
            raise DimensionError(
                f"regressor matrix must be ({k}, {k}) to match zf, got {nt.shape}"
            )
        object.__setattr__(self, "zf", zf)
        object.__setattr__(self, "nt", nt)


def stack_regressors(
    units: list[FilterUnit], measured_output: float, model: PlantModel
) -> RegressorStack:
    """Assemble the square regressor stack from exactly m + n units."""
    expected = model.m + model.n
    if len(units) != expected:
        raise ConfigurationError(
            f"the stack needs exactly m + n = {expected} filter units, got {len(units)}"
        )
    zf = np.empty(expected)
    nt = np.empty((expected, expected))
    for j, unit in enumerate(units):
        zf[j], nt[j] = regressor_row(unit, measured_output, model)
    return RegressorStack(zf=zf, nt=nt)
