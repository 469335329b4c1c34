"""Command-line front end: simulate / verify / plot.

Exit codes: 0 success, 1 a requested check failed, 2 configuration error,
3 runtime abort inside the integrator.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    DEFAULT_END,
    DEFAULT_STEP,
    ExperimentConfig,
    load_config,
    preset_config,
    run_experiment,
)
from .errors import ConfigurationError, SimulationAbort, TraceFormatError
from .plots import render_trace_plots
from .trace import read_trace, write_trace
from .verification import oracle_checks, summarize

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dremobs",
        description=(
            "Simulate an adaptive observer for plants with switched unknown "
            "parameters and verify its algebraic invariants."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment and write artifacts")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON experiment configuration")
    src.add_argument("--preset", help="built-in plant preset (chua)")
    sim.add_argument("--mode", choices=("ideal", "robust"), default="ideal")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="noise seed override")
    sim.add_argument("--h", type=float, default=None, help="integration step override")
    sim.add_argument("--T", type=float, default=None, help="end time override")
    sim.add_argument("--no-plots", action="store_true", help="skip SVG rendering")

    ver = sub.add_parser("verify", help="run the oracle suite on an ideal run")
    ver.add_argument("--preset", default="chua", help="built-in plant preset")
    ver.add_argument("--h", type=float, default=DEFAULT_STEP)
    ver.add_argument("--T", type=float, default=DEFAULT_END)
    ver.add_argument("--out", default=None, help="optional directory for the report")

    plt = sub.add_parser("plot", help="render SVG panels from a saved trace")
    plt.add_argument("--trace", required=True, help="path to a trace CSV")
    plt.add_argument("--out", required=True, help="output directory")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.mode != "ideal" and cfg.mode != args.mode:
            raise ConfigurationError(
                "config.mode: conflicts with --mode; set the mode in the file"
            )
    else:
        cfg = preset_config(
            args.preset,
            args.mode,
            seed=args.seed if args.seed is not None else 0,
            step_size=args.h if args.h is not None else DEFAULT_STEP,
            end_time=args.T if args.T is not None else DEFAULT_END,
        )
        return cfg
    # File-based config with CLI overrides.
    if args.seed is not None or args.h is not None or args.T is not None:
        from .sim import StepConfig

        step = cfg.step
        cfg.step = StepConfig(
            step_size=args.h if args.h is not None else step.step_size,
            end_time=args.T if args.T is not None else step.end_time,
            start_time=step.start_time,
        )
        if args.seed is not None:
            cfg.seed = args.seed
            if cfg.noise is not None:
                from dataclasses import replace

                cfg.noise = replace(cfg.noise, seed=args.seed)
    return cfg


def _cmd_simulate(args) -> int:
    try:
        cfg = _resolve_config(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_experiment(cfg)
    except SimulationAbort as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    trace_path = out / "trace.csv"
    write_trace(result.trace, trace_path)
    summary = summarize(result)
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )
    if not args.no_plots:
        render_trace_plots(result.trace, out)
    print(f"trace: {trace_path}")
    print(f"mode: {summary['mode']}  seed: {summary['seed']}  switches: {summary['switch_count']}")
    print(f"final parameter error norms: {summary['final_theta_error']}")
    print(f"final state error norm: {summary['final_x_error']:.6g}")
    print(f"determinant range: [{summary['delta_min']:.6g}, {summary['delta_max']:.6g}]")
    print(f"excitation integrals: {summary['excitation_integrals']}")
    if "pe_min_window_means" in summary:
        print(
            f"min excitation window means (window {summary['pe_window']:g} s): "
            f"{summary['pe_min_window_means']}"
        )
    return EXIT_OK


def _cmd_verify(args) -> int:
    try:
        cfg = preset_config(args.preset, "verify", step_size=args.h, end_time=args.T)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg, collect_diagnostics=True)
    except SimulationAbort as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    checks = oracle_checks(result)
    for check in checks:
        print(check.line())
    all_passed = all(c.passed for c in checks)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = {
            "all_passed": all_passed,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "value": c.value,
                    "threshold": c.threshold,
                    "detail": c.detail,
                }
                for c in checks
            ],
            "summary": summarize(result),
        }
        (out / "verify_report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="ascii"
        )
    print("all checks passed" if all_passed else "some checks FAILED")
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def _cmd_plot(args) -> int:
    try:
        trace = read_trace(args.trace)
    except (OSError, TraceFormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    written = render_trace_plots(trace, args.out)
    for path in written:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "verify":
        return _cmd_verify(args)
    return _cmd_plot(args)


if __name__ == "__main__":
    sys.exit(main())
