"""Built-in algebraic verification oracles over a finished run.

Every check compares simulated signals against an identity that holds
exactly in continuous time, using ground truth only available inside the
simulator (true states, true parameters, states at switch instants).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .estimator import pe_check
from .sim import RunResult

DECOMPOSITION_TOL = 1e-4
LRE_TOL = 1e-4
MIXING_REL_TOL = 1e-3
MONOTONE_SLACK = 1e-10
SIGN_FLOOR = 1e-8
QUADRATURE_REL_TOL = 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.detail}"


def _theta_errors(result: RunResult) -> np.ndarray:
    """Signed per-component estimation errors, shape (T, s, m)."""
    return result.trace.theta_hat - result.model.true_params[None, :, :]


def check_decomposition(result: RunResult) -> CheckResult:
    """State equals zero-input response plus both filtered responses."""
    if result.diagnostics is None:
        raise ConfigurationError("run was made without diagnostics")
    worst = float(result.diagnostics.decomposition_residual.max())
    return CheckResult(
        name="decomposition_identity",
        passed=worst <= DECOMPOSITION_TOL,
        value=worst,
        threshold=DECOMPOSITION_TOL,
        detail=f"max residual {worst:.3e} (tol {DECOMPOSITION_TOL:.1e})",
    )


def check_lre(result: RunResult) -> CheckResult:
    """Every scalar regression matches the ground-truth augmented parameter."""
    if result.diagnostics is None:
        raise ConfigurationError("run was made without diagnostics")
    worst = float(result.diagnostics.lre_residual_max.max())
    return CheckResult(
        name="regression_residual",
        passed=worst <= LRE_TOL,
        value=worst,
        threshold=LRE_TOL,
        detail=f"max residual {worst:.3e} (tol {LRE_TOL:.1e})",
    )


def check_mixing(result: RunResult) -> CheckResult:
    """Mixed vector equals determinant times the augmented parameter."""
    if result.diagnostics is None:
        raise ConfigurationError("run was made without diagnostics")
    dg = result.diagnostics
    scale = np.maximum(1.0, np.abs(dg.delta))
    worst = float((dg.mixing_residual / scale).max())
    return CheckResult(
        name="mixing_identity",
        passed=worst <= MIXING_REL_TOL,
        value=worst,
        threshold=MIXING_REL_TOL,
        detail=f"max scaled residual {worst:.3e} (tol {MIXING_REL_TOL:.1e})",
    )


def check_freeze(result: RunResult) -> CheckResult:
    """Inactive estimates are bit-frozen between grid points."""
    trace = result.trace
    theta = trace.theta_hat  # (T, s, m)
    sigma_step = trace.sigma[:-1]
    worst = 0.0
    for i in range(trace.num_subsystems):
        inactive = sigma_step != i + 1
        if not inactive.any():
            continue
        step_change = np.abs(theta[1:, i, :] - theta[:-1, i, :]).max(axis=1)
        worst = max(worst, float(step_change[inactive].max()))
    return CheckResult(
        name="inactive_freeze",
        passed=worst == 0.0,
        value=worst,
        threshold=0.0,
        detail=f"max inactive-step change {worst:.3e} (must be exactly 0)",
    )


def check_monotone_decay(result: RunResult) -> CheckResult:
    """Per-component error magnitudes never rise above their running minimum
    by more than the slack, and never change sign while clearly nonzero."""
    errors = _theta_errors(result)  # (T, s, m)
    mags = np.abs(errors)
    running_min = np.minimum.accumulate(mags, axis=0)
    worst_rise = float((mags - running_min).max())
    monotone_ok = worst_rise <= MONOTONE_SLACK

    sign_ok = True
    prev, cur = errors[:-1], errors[1:]
    flipped = np.sign(prev) * np.sign(cur) < 0
    big = np.minimum(np.abs(prev), np.abs(cur)) > SIGN_FLOOR
    if np.any(flipped & big):
        sign_ok = False
    passed = monotone_ok and sign_ok
    detail = (
        f"max rise above running min {worst_rise:.3e} (slack {MONOTONE_SLACK:.1e}); "
        f"sign flips above {SIGN_FLOOR:.0e}: {'none' if sign_ok else 'present'}"
    )
    return CheckResult(
        name="elementwise_decay",
        passed=passed,
        value=worst_rise,
        threshold=MONOTONE_SLACK,
        detail=detail,
    )


def trapezoid_excitation(trace) -> np.ndarray:
    """Per-subsystem gated integral of the squared determinant by trapezoid.

    Subintervals ending at a switch instant use the pre-reset determinant
    from the trace header for the right endpoint, matching the one-sided
    limit of the integrand.
    """
    t = trace.t
    if t.shape[0] < 2:
        return np.zeros(trace.num_subsystems)
    d2_left = trace.delta[:-1] ** 2
    d2_right = trace.delta[1:] ** 2
    for time, pre in zip(trace.switch_times, trace.pre_reset_delta):
        if np.isnan(pre):
            continue
        row = int(np.searchsorted(t, time))
        if 1 <= row < t.shape[0]:
            d2_right[row - 1] = pre * pre
    seg = 0.5 * np.diff(t) * (d2_left + d2_right)
    sigma_step = trace.sigma[:-1]
    return np.array(
        [seg[sigma_step == i + 1].sum() for i in range(trace.num_subsystems)]
    )


def check_excitation_consistency(result: RunResult) -> CheckResult:
    """Online accumulators agree with post-hoc quadrature and never decrease."""
    trace = result.trace
    online = trace.excitation
    increments = np.diff(online, axis=0)
    nondecreasing = increments.size == 0 or float(increments.min()) >= 0.0
    quad = trapezoid_excitation(trace)
    final = online[-1]
    denom = np.maximum(np.abs(final), 1e-30)
    rel = float(np.max(np.abs(final - quad) / denom))
    passed = nondecreasing and rel <= QUADRATURE_REL_TOL
    return CheckResult(
        name="excitation_consistency",
        passed=passed,
        value=rel,
        threshold=QUADRATURE_REL_TOL,
        detail=(
            f"online vs quadrature rel diff {rel:.3e} (tol {QUADRATURE_REL_TOL:.1e}); "
            f"non-decreasing: {nondecreasing}"
        ),
    )


def oracle_checks(result: RunResult) -> list[CheckResult]:
    """The full verification battery for an ideal-mode diagnostic run."""
    return [
        check_decomposition(result),
        check_lre(result),
        check_mixing(result),
        check_freeze(result),
        check_monotone_decay(result),
        check_excitation_consistency(result),
    ]


def summarize(result: RunResult, pe_window: float = 20.0) -> dict:
    """Machine-readable run summary: final errors, excitation, determinant range."""
    trace = result.trace
    summary = {
        "mode": trace.meta.get("mode"),
        "model": trace.meta.get("model"),
        "seed": trace.meta.get("seed"),
        "t_end": trace.meta.get("t_end"),
        "rows": int(trace.data.shape[0]),
        "switch_count": max(0, len(trace.switch_times) - 1),
        "final_theta_error": trace.theta_error[-1].tolist(),
        "initial_theta_error": trace.theta_error[0].tolist(),
        "final_x_error": float(trace.x_error[-1]),
        "delta_min": float(trace.delta.min()),
        "delta_max": float(trace.delta.max()),
        "excitation_integrals": trace.excitation[-1].tolist(),
        "elapsed_seconds": result.elapsed_seconds,
    }
    span = trace.t[-1] - trace.t[0]
    if span > 0:
        window = min(pe_window, span)
        report = pe_check(trace, window, alpha0=1e-12)
        summary["pe_window"] = window
        summary["pe_min_window_means"] = report.min_means.tolist()
    return summary
