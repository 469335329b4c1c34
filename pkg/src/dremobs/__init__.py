"""Simulation library for adaptive observers of plants with switched unknown
parameters: auxiliary filter banks, regressor extension and mixing, gated
element-wise adaptation, and excitation monitoring."""

from .errors import (
    ConfigurationError,
    DimensionError,
    GainStabilityError,
    SimulationAbort,
    TraceFormatError,
)
from .estimator import (
    DremEstimator,
    ExcitationReport,
    MixedSignals,
    adaptation_rate,
    excitation_rate,
    mix,
    pe_check,
    residual_dbar,
)
from .filters import (
    FilterUnit,
    RegressorStack,
    filter_derivative,
    regressor_row,
    reset_filters,
    stack_regressors,
)
from .linalg import (
    StabilityVerdict,
    adjugate,
    characteristic_polynomial,
    det_adjugate,
    determinant,
    hurwitz_verdict,
    is_hurwitz,
    norm2,
    norm_inf,
    routh_verdict,
)
from .observer import ErrorMetrics, ObserverState, error_metrics, observer_derivative
from .plant import (
    NoiseSpec,
    OutputRegion,
    PlantModel,
    StateRegionRule,
    TimeScheduleRule,
    chua_preset,
    chua_robust_noise,
    plant_derivative,
    sample_noise,
)
from .sim import (
    Diagnostics,
    HybridState,
    RunResult,
    StateLayout,
    StepConfig,
    SwitchEvent,
    detect_switch,
    rk4_step,
    run_simulation,
)
from .trace import SimulationTrace, read_trace, traces_equal, write_trace

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DimensionError",
    "GainStabilityError",
    "SimulationAbort",
    "TraceFormatError",
    "DremEstimator",
    "ExcitationReport",
    "MixedSignals",
    "adaptation_rate",
    "excitation_rate",
    "mix",
    "pe_check",
    "residual_dbar",
    "FilterUnit",
    "RegressorStack",
    "filter_derivative",
    "regressor_row",
    "reset_filters",
    "stack_regressors",
    "StabilityVerdict",
    "adjugate",
    "characteristic_polynomial",
    "det_adjugate",
    "determinant",
    "hurwitz_verdict",
    "is_hurwitz",
    "norm2",
    "norm_inf",
    "routh_verdict",
    "ErrorMetrics",
    "ObserverState",
    "error_metrics",
    "observer_derivative",
    "NoiseSpec",
    "OutputRegion",
    "PlantModel",
    "StateRegionRule",
    "TimeScheduleRule",
    "chua_preset",
    "chua_robust_noise",
    "plant_derivative",
    "sample_noise",
    "Diagnostics",
    "HybridState",
    "RunResult",
    "StateLayout",
    "StepConfig",
    "SwitchEvent",
    "detect_switch",
    "rk4_step",
    "run_simulation",
    "SimulationTrace",
    "read_trace",
    "traces_equal",
    "write_trace",
]
