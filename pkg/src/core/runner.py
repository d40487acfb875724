"""Run orchestration for the command-line front end.

A :class:`RunConfig` fully describes one invocation. :func:`run` performs
it, stages every output file and publishes them together only when the
whole run succeeds.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.core.banded import SUPPORTED_ORDERS, validate_order
from src.core.benchmark import BenchmarkConfig, entropy_sweep, run_benchmark
from src.core.errors import SpacingError, UsageError
from src.core.selectors import (
    HAT_CHOICES,
    METHODS,
    LambdaGrid,
    SelectionDiagnostics,
    SelectorSettings,
    lambda_grid,
    order_study,
    select_lambda,
    sweep_grid,
)
from src.core.smoother import Signal, SmoothResult, fit_metrics, whittaker_smooth
from src.utils.csv_io import IngestSpec, StagedOutputs, ingest_csv, write_frame
from src.utils.plotting import plot_benchmark, plot_selection, plot_smoothing
from src.utils.run_logger import RunLogger


logger = logging.getLogger(__name__)

MODES = ("smooth", "benchmark")
SELECTIONS = METHODS + ("fixed",)

SMOOTH_FLOAT_FORMAT = "%.12e"
BENCHMARK_FLOAT_FORMAT = "%.17e"

SMOOTHED_COLUMNS = ["t", "y", "w", "s_hat", "residual"]
DIAGNOSTIC_COLUMNS = [
    "lambda_x",
    "cv_sigma",
    "v_distance",
    "s_distance",
    "log_R",
    "log_S",
    "log_Hres",
    "log_Hsmooth",
]
# distance column and point columns filled by each distance selector
_CURVE_COLUMNS = {
    "vcurve": ("v_distance", "log_R", "log_S"),
    "scurve": ("s_distance", "log_Hres", "log_Hsmooth"),
}


@dataclass(frozen=True)
class RunConfig:
    """One invocation of the tool.

    Attributes:
        mode: ``smooth`` or ``benchmark``.
        ingest: Input source and column mapping (smooth mode).
        order: Difference order.
        selection: ``cv``, ``vcurve``, ``scurve`` or ``fixed``.
        fixed_lambda: λ for ``fixed`` selection.
        grid: λ grid for the selectors.
        hat_method: Leverage method for CV.
        probes: Probe count for the stochastic leverage estimate.
        seed: Seed for stochastic leverage probes.
        output_dir: Directory receiving the output files.
        emit_diagnostics: Write diagnostics.csv when a selector ran.
        emit_svg: Also write SVG plots.
        strict_spacing: Unequal sample spacing is an error, not a warning.
        spacing_rtol: Relative tolerance of the spacing check.
        allow_interpolation: Permit fixed λ = 0 (exact interpolation).
        compare_orders: Also select and smooth with orders 1, 2 and 3.
        gap_policy: S-curve residual gap handling.
        workers: Threads for per-λ work.
        benchmark: Protocol for benchmark mode.
        entropy_sweep_trials: Trials per level for entropy_sweep.csv; 0 skips it.
        entropy_sweep_sigmas: Noise levels of the entropy sweep.
    """

    mode: str = "smooth"
    ingest: IngestSpec = field(default_factory=IngestSpec)
    order: int = 2
    selection: str = "scurve"
    fixed_lambda: Optional[float] = None
    grid: LambdaGrid = field(default_factory=lambda_grid)
    hat_method: str = "auto"
    probes: int = 256
    seed: int = 0
    output_dir: str = "output"
    emit_diagnostics: bool = True
    emit_svg: bool = False
    strict_spacing: bool = False
    spacing_rtol: float = 1e-6
    allow_interpolation: bool = False
    compare_orders: bool = False
    gap_policy: str = "zero-fill"
    workers: int = 1
    benchmark: Optional[BenchmarkConfig] = None
    entropy_sweep_trials: int = 0
    entropy_sweep_sigmas: Tuple[float, ...] = (0.01, 0.05, 0.1, 0.3, 0.5)

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        validate_order(self.order)
        if self.selection not in SELECTIONS:
            raise UsageError(f"unknown selection {self.selection!r}; expected one of {SELECTIONS}")
        if self.hat_method not in HAT_CHOICES:
            raise UsageError(f"unknown hat method {self.hat_method!r}; expected one of {HAT_CHOICES}")
        if self.mode == "smooth" and self.selection == "fixed":
            lam = self.fixed_lambda
            if lam is None:
                raise UsageError("fixed selection needs --lambda")
            if not np.isfinite(lam) or lam < 0:
                raise UsageError(f"--lambda must be finite and > 0, got {lam}")
            if lam == 0 and not self.allow_interpolation:
                raise UsageError("--lambda 0 interpolates the data; pass --allow-interpolation to accept it")
        if self.mode == "benchmark" and self.benchmark is None:
            raise UsageError("benchmark mode needs a benchmark configuration")
        if self.workers < 1:
            raise UsageError(f"workers must be >= 1, got {self.workers}")

    def selector_settings(self, order: Optional[int] = None) -> SelectorSettings:
        return SelectorSettings(
            order=self.order if order is None else order,
            grid=self.grid,
            hat_method=self.hat_method,
            probes=self.probes,
            seed=self.seed,
            workers=self.workers,
            gap_policy=self.gap_policy,
        )


@dataclass(frozen=True)
class RunOutcome:
    """What a successful run produced."""

    files: Dict[str, Path]
    summary: str
    chosen_lambda: Optional[float] = None


def smoothed_frame(signal: Signal, result: SmoothResult) -> pd.DataFrame:
    """Per-sample output table; y is left empty at gaps."""
    return pd.DataFrame(
        {
            "t": signal.t,
            "y": np.where(signal.observed, signal.y, np.nan),
            "w": signal.w,
            "s_hat": result.s_hat,
            "residual": result.residuals,
        },
        columns=SMOOTHED_COLUMNS,
    )


def diagnostics_frame(diagnostics: SelectionDiagnostics) -> pd.DataFrame:
    """Per-grid-λ diagnostics table.

    One row per grid λ. Distances sit on the row of the lower endpoint of
    their pair. Columns the selector does not produce stay empty, as do
    dropped grid points.
    """
    grid = diagnostics.grid.values
    columns = {name: np.full(len(grid), np.nan) for name in DIAGNOSTIC_COLUMNS}
    columns["lambda_x"] = grid.copy()

    if diagnostics.method == "cv":
        columns["cv_sigma"] = np.asarray(diagnostics.curve_y, dtype=float)
    else:
        distance, x_name, y_name = _CURVE_COLUMNS[diagnostics.method]
        curve = diagnostics.aux
        columns[distance][curve.indices[:-1]] = diagnostics.curve_y
        columns[x_name][curve.indices] = curve.points[:, 0]
        columns[y_name][curve.indices] = curve.points[:, 1]
    return pd.DataFrame(columns, columns=DIAGNOSTIC_COLUMNS)


def _order_study_frame(signal: Signal, entries) -> pd.DataFrame:
    rows = []
    for entry in entries:
        metrics = fit_metrics(signal, entry.result)
        rows.append(
            {
                "order": entry.order,
                "method": entry.diagnostics.method,
                "lambda": entry.diagnostics.chosen_lambda,
                "R": metrics.R,
                "S": metrics.S,
                "Q": metrics.Q,
                "dropped": len(entry.diagnostics.dropped),
            }
        )
    return pd.DataFrame(rows, columns=["order", "method", "lambda", "R", "S", "Q", "dropped"])


def _check_spacing(signal: Signal, config: RunConfig) -> None:
    if signal.is_uniformly_spaced(config.spacing_rtol):
        return
    message = "sample positions are not equally spaced; the smoother treats them as unit steps"
    if config.strict_spacing:
        raise SpacingError(message)
    logger.warning(message)


def _run_smooth(config: RunConfig) -> RunOutcome:
    signal = ingest_csv(config.ingest)
    _check_spacing(signal, config)

    with StagedOutputs(config.output_dir) as staged:
        diagnostics = None
        if config.selection == "fixed":
            lam = float(config.fixed_lambda)
            if lam == 0 and signal.n_observed < signal.n:
                raise UsageError("--lambda 0 is only allowed for data without gaps")
        else:
            settings = config.selector_settings()
            sweep = sweep_grid(signal, config.grid, config.order, workers=config.workers)
            diagnostics = select_lambda(signal, config.selection, settings, sweep=sweep)
            lam = diagnostics.chosen_lambda

        result = whittaker_smooth(signal, lam, config.order)
        write_frame(smoothed_frame(signal, result), staged.path("smoothed.csv"), SMOOTH_FLOAT_FORMAT)

        if diagnostics is not None and config.emit_diagnostics:
            write_frame(diagnostics_frame(diagnostics), staged.path("diagnostics.csv"), SMOOTH_FLOAT_FORMAT)

        if config.compare_orders:
            method = "scurve" if config.selection == "fixed" else config.selection
            entries = order_study(signal, config.selector_settings(), SUPPORTED_ORDERS, method=method)
            write_frame(_order_study_frame(signal, entries), staged.path("order_study.csv"), SMOOTH_FLOAT_FORMAT)

        if config.emit_svg:
            plot_smoothing(signal, result, staged.path("smoothed.svg"))
            if diagnostics is not None:
                plot_selection(diagnostics, staged.path("selection.svg"))

        files = staged.commit()

    if diagnostics is None:
        summary = f"method=fixed lambda={lam:.6e} grid=none dropped=0"
    else:
        grid = config.grid.values
        summary = (
            f"method={diagnostics.method} lambda={lam:.6e} "
            f"grid=[{grid[0]:.6e}, {grid[-1]:.6e}] dropped={len(diagnostics.dropped)}"
        )
    return RunOutcome(files=files, summary=summary, chosen_lambda=lam)


def _run_benchmark(config: RunConfig) -> RunOutcome:
    protocol = config.benchmark
    with StagedOutputs(config.output_dir) as staged:
        with RunLogger(staged.path("trials.jsonl"), metadata=protocol.to_metadata()) as run_log:
            report = run_benchmark(protocol, run_logger=run_log)
            run_log.log_event(
                "finished",
                records=len(report.records),
                skipped=len(report.failures),
                trials_logged=run_log.trial_count,
            )

        frame = report.to_frame()
        write_frame(frame, staged.path("benchmark.csv"), BENCHMARK_FLOAT_FORMAT)
        write_frame(report.summary(), staged.path("benchmark_summary.csv"), BENCHMARK_FLOAT_FORMAT)

        if config.entropy_sweep_trials > 0:
            sweep = entropy_sweep(
                protocol.expression_id,
                protocol.n,
                protocol.t_min,
                protocol.t_max,
                config.entropy_sweep_sigmas,
                config.entropy_sweep_trials,
                protocol.base_seed,
            )
            write_frame(sweep, staged.path("entropy_sweep.csv"), BENCHMARK_FLOAT_FORMAT)

        if config.emit_svg:
            plot_benchmark(frame, staged.path("benchmark_lambda.svg"), staged.path("benchmark_error.svg"))

        files = staged.commit()

    summary = (
        f"mode=benchmark expression={protocol.expression_id} "
        f"records={len(report.records)} skipped={len(report.failures)}"
    )
    return RunOutcome(files=files, summary=summary)


def run(config: RunConfig) -> RunOutcome:
    """Execute a run and print its one-line summary to standard output.

    Args:
        config: Validated run description.

    Returns:
        RunOutcome listing the published files.

    Raises:
        SmootherError: Any package error; no output file is left behind.
    """
    outcome = _run_benchmark(config) if config.mode == "benchmark" else _run_smooth(config)
    for name, path in sorted(outcome.files.items()):
        logger.info("wrote %s", path)
    print(outcome.summary)
    return outcome
