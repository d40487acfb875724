"""Main entry point for the Whittaker smoothing tool.

This module provides the command-line interface: smooth a CSV series with
a fixed or automatically selected λ, or run the simulation benchmark.
Defaults come from src/config/*.yaml, then SMOOTHER_* environment
variables, then flags.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

import yaml

from src.core.benchmark import ERROR_METRICS, EXPRESSIONS, BenchmarkConfig
from src.core.errors import SmootherError, UsageError
from src.core.runner import MODES, SELECTIONS, RunConfig, run
from src.core.selectors import GAP_POLICIES, HAT_CHOICES, lambda_grid
from src.utils.config_loader import (
    DEFAULT_BENCHMARK_PATH,
    DEFAULT_CONFIG_PATH,
    apply_env_overrides,
    get_config_value,
    load_benchmark_overrides,
    load_config,
)
from src.utils.csv_io import IngestSpec
from src.utils.logging_setup import configure_logging


logger = logging.getLogger(__name__)


def parse_args(argv: Optional[List[str]] = None):
    """Parse command-line arguments.

    Args:
        argv: Argument list; defaults to sys.argv[1:].

    Returns:
        argparse.Namespace: Parsed command-line arguments. Options left at
        None fall back to the configuration files.
    """
    parser = argparse.ArgumentParser(
        description="Whittaker-Eilers smoothing with automatic lambda selection"
    )
    parser.add_argument("--mode", choices=MODES, help="Run mode (default: smooth, or benchmark with --benchmark-config)")
    parser.add_argument("--input", help="Input CSV path, '-' for standard input (default: stdin)")
    parser.add_argument("--t-col", default="t", help="Column with sample positions (default: t)")
    parser.add_argument("--y-col", default="y", help="Column with observed values (default: y)")
    parser.add_argument("--w-col", help="Optional column with observation weights in [0, 1]")
    parser.add_argument("--index-as-t", action="store_true", help="Use row numbers 0..n-1 as sample positions")
    parser.add_argument("--delimiter", help="Field separator (default: ',')")
    parser.add_argument("--order", type=int, help="Difference order 1, 2 or 3 (default: 2)")
    parser.add_argument("--select", choices=SELECTIONS, help="Lambda selection method (default: scurve)")
    parser.add_argument("--lambda", dest="lam", type=float, help="Regularization parameter for --select fixed")
    parser.add_argument("--grid-min-exp", type=float, help="Smallest grid exponent, lambda = 10^x (default: -2)")
    parser.add_argument("--grid-max-exp", type=float, help="Largest grid exponent (default: 8)")
    parser.add_argument("--grid-ppd", type=int, help="Grid points per decade (default: 10)")
    parser.add_argument("--hat-method", choices=HAT_CHOICES, help="Leverage method for cross-validation (default: auto)")
    parser.add_argument("--probes", type=int, help="Probe count for --hat-method stochastic-probe (default: 256)")
    parser.add_argument("--gap-policy", choices=GAP_POLICIES, help="Gap handling of S-curve residual spectra")
    parser.add_argument("--output-dir", help="Directory for output files (default: output)")
    parser.add_argument("--emit-svg", action="store_true", help="Also write SVG plots")
    parser.add_argument("--no-diagnostics", action="store_true", help="Skip diagnostics.csv")
    parser.add_argument("--compare-orders", action="store_true", help="Also select and smooth with orders 1, 2 and 3")
    parser.add_argument("--seed", type=int, help="Seed for stochastic probes and benchmark noise (default: 0)")
    parser.add_argument("--mae", action="store_true", help="Benchmark with the sum of absolute errors instead of mse")
    parser.add_argument("--strict-spacing", action="store_true", help="Fail on unequally spaced samples")
    parser.add_argument("--allow-interpolation", action="store_true", help="Permit --lambda 0 on data without gaps")
    parser.add_argument("--benchmark-config", help="YAML overriding the benchmark protocol")
    parser.add_argument("--config", help="Alternative main configuration YAML")
    parser.add_argument("--workers", type=int, help="Threads for per-lambda work and benchmark trials (default: 1)")
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug mode with verbose logging"
    )
    return parser.parse_args(argv)


def _pick(flag: Any, config: Dict[str, Any], key: str, default: Any = None) -> Any:
    return flag if flag is not None else get_config_value(config, key, default)


def _number(value: Any, key: str, kind=float):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"{key} must be a number, got {value!r}") from None


def build_run_config(args, config: Dict[str, Any]) -> RunConfig:
    """Combine parsed flags with the merged configuration.

    Raises:
        UsageError: Invalid or inconsistent settings.
    """
    mode = args.mode or ("benchmark" if args.benchmark_config else "smooth")
    order = _number(_pick(args.order, config, "ORDER", 2), "ORDER", int)
    seed = _number(_pick(args.seed, config, "SEED", 0), "SEED", int)
    workers = _number(_pick(args.workers, config, "WORKERS", 1), "WORKERS", int)
    hat_method = _pick(args.hat_method, config, "HAT_METHOD", "auto")
    probes = _number(_pick(args.probes, config, "HUTCHINSON_PROBES", 256), "HUTCHINSON_PROBES", int)
    gap_policy = _pick(args.gap_policy, config, "GAP_POLICY", "zero-fill")
    grid = lambda_grid(
        _number(_pick(args.grid_min_exp, config, "GRID_MIN_EXP", -2.0), "GRID_MIN_EXP"),
        _number(_pick(args.grid_max_exp, config, "GRID_MAX_EXP", 8.0), "GRID_MAX_EXP"),
        _number(_pick(args.grid_ppd, config, "GRID_PPD", 10), "GRID_PPD", int),
    )

    benchmark = None
    if mode == "benchmark":
        expression = str(get_config_value(config, "EXPRESSION", "sin"))
        if expression not in EXPRESSIONS:
            raise UsageError(f"unknown expression {expression!r}; expected one of {sorted(EXPRESSIONS)}")
        metric = "mae" if args.mae else str(get_config_value(config, "METRIC", "mse"))
        if metric not in ERROR_METRICS:
            raise UsageError(f"unknown metric {metric!r}; expected one of {sorted(ERROR_METRICS)}")
        sigmas = get_config_value(config, "SIGMAS", [0.05, 0.1, 0.2, 0.35, 0.5])
        if not isinstance(sigmas, (list, tuple)):
            raise UsageError(f"SIGMAS must be a list, got {sigmas!r}")
        benchmark = BenchmarkConfig(
            expression_id=expression,
            n=_number(get_config_value(config, "N", 1000), "N", int),
            t_min=_number(get_config_value(config, "T_MIN", 0.0), "T_MIN"),
            t_max=_number(get_config_value(config, "T_MAX", 12.566370614359172), "T_MAX"),
            sigmas=tuple(_number(s, "SIGMAS") for s in sigmas),
            trials=_number(get_config_value(config, "TRIALS", 20), "TRIALS", int),
            grid=grid,
            order=order,
            base_seed=_number(_pick(args.seed, config, "BASE_SEED", 0), "BASE_SEED", int),
            metric=metric,
            hat_method=hat_method,
            probes=probes,
            gap_policy=gap_policy,
            workers=workers,
        )

    missing_tokens = get_config_value(config, "MISSING_TOKENS", ["", "nan", "NA"])
    ingest = IngestSpec(
        path=args.input,
        t_col=args.t_col,
        y_col=args.y_col,
        w_col=args.w_col,
        index_as_t=args.index_as_t,
        delimiter=_pick(args.delimiter, config, "DELIMITER", ","),
        missing_tokens=tuple("" if token is None else str(token) for token in missing_tokens),
    )
    return RunConfig(
        mode=mode,
        ingest=ingest,
        order=order,
        selection=_pick(args.select, config, "SELECT", "scurve"),
        fixed_lambda=args.lam,
        grid=grid,
        hat_method=hat_method,
        probes=probes,
        seed=seed,
        output_dir=str(_pick(args.output_dir, config, "OUTPUT_DIR", "output")),
        emit_diagnostics=not args.no_diagnostics,
        emit_svg=args.emit_svg,
        strict_spacing=args.strict_spacing,
        spacing_rtol=_number(get_config_value(config, "SPACING_RTOL", 1e-6), "SPACING_RTOL"),
        allow_interpolation=args.allow_interpolation,
        compare_orders=args.compare_orders,
        gap_policy=gap_policy,
        workers=workers,
        benchmark=benchmark,
        entropy_sweep_trials=_number(get_config_value(config, "ENTROPY_SWEEP_TRIALS", 0), "ENTROPY_SWEEP_TRIALS", int),
        entropy_sweep_sigmas=tuple(
            _number(s, "ENTROPY_SWEEP_SIGMAS")
            for s in get_config_value(config, "ENTROPY_SWEEP_SIGMAS", [0.01, 0.05, 0.1, 0.3, 0.5])
        ),
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run the tool and return its exit code.

    0 on success, 2 for usage errors, 3 for data errors and 4 for numerical
    failures. argparse exits with 2 on its own for malformed flags.
    """
    args = parse_args(argv)
    configure_logging(args.debug)

    try:
        config = load_config(args.config or DEFAULT_CONFIG_PATH, DEFAULT_BENCHMARK_PATH)
        if args.benchmark_config:
            config = load_benchmark_overrides(args.benchmark_config, config)
        config = apply_env_overrides(config)
        # .env may set SMOOTHER_LOG_LEVEL
        configure_logging(args.debug)
        run(build_run_config(args, config))
    except SmootherError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        logger.error("%s", exc)
        return UsageError.exit_code
    except yaml.YAMLError as exc:
        logger.error("invalid configuration: %s", exc)
        return UsageError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
