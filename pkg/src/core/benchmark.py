"""Simulation benchmark: synthetic truth, Gaussian noise and λ oracles.

For every noise level and trial a noisy copy of an analytic test function is
smoothed over the whole λ grid. The grid λ with the smallest error against
the truth is the oracle λ₀; each selector's choice is scored with the same
error array, so the oracle never loses to a selector.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from src.core.errors import (
    DimensionMismatch,
    DomainError,
    InvalidRange,
    NumericalError,
    SmootherError,
    UnknownExpression,
    UsageError,
)
from src.core.selectors import (
    METHODS,
    GridSweep,
    LambdaGrid,
    SelectorSettings,
    lambda_grid,
    select_lambda,
    sweep_grid,
)
from src.core.smoother import MIN_SIGNAL_LENGTH, Signal
from src.core.spectral import spectral_entropy
from src.utils.parallel import ordered_map


logger = logging.getLogger(__name__)


def _log_sin_product(t: np.ndarray) -> np.ndarray:
    return 0.5 * (np.log(t + 1.0) + np.sin(t) * np.sin(3.0 * t))


def _multi_tone_log(t: np.ndarray) -> np.ndarray:
    tones = np.sin(t) + np.sin(9.0 * t) + np.sin(17.0 * t) + np.sin(23.0 * t)
    return 0.25 * (tones + np.log(t + 1.0))


EXPRESSIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "log_sin_product": _log_sin_product,
    "multi_tone_log": _multi_tone_log,
}

# expressions containing log(t + 1), defined for t >= 0 here
_LOG_EXPRESSIONS = frozenset({"log_sin_product", "multi_tone_log"})

# report column suffix per selector
METHOD_COLUMNS = {"cv": "cv", "vcurve": "vc", "scurve": "s"}

REPORT_COLUMNS = [
    "sigma",
    "trial",
    "lambda_opt",
    "mse_opt",
    "lambda_cv",
    "mse_cv",
    "lambda_vc",
    "mse_vc",
    "lambda_s",
    "mse_s",
]


@dataclass(frozen=True, eq=False)
class TruthSignal:
    expression_id: str
    t: np.ndarray
    s: np.ndarray

    @property
    def n(self) -> int:
        return len(self.s)


def synth_signal(expression_id: str, n: int, t_min: float, t_max: float) -> TruthSignal:
    """Sample a named analytic function on a uniform grid.

    Built-ins are ``sin``, ``log_sin_product`` = ½(log(t+1) + sin t·sin 3t)
    and ``multi_tone_log`` = ¼(sin t + sin 9t + sin 17t + sin 23t + log(t+1)).

    Args:
        expression_id: Name from EXPRESSIONS.
        n: Number of samples, at least 4.
        t_min: First sample position.
        t_max: Last sample position, greater than t_min.

    Returns:
        TruthSignal with t = linspace(t_min, t_max, n).

    Raises:
        UnknownExpression: Name not in EXPRESSIONS.
        InvalidRange: n below 4 or t_min >= t_max.
        DomainError: Negative t for a log-containing expression.

    Example:
        >>> synth_signal("sin", 5, 0.0, np.pi).s.round(6)
        array([0.      , 0.707107, 1.      , 0.707107, 0.      ])
    """
    if expression_id not in EXPRESSIONS:
        raise UnknownExpression(
            f"unknown expression {expression_id!r}; expected one of {sorted(EXPRESSIONS)}"
        )
    if n < MIN_SIGNAL_LENGTH:
        raise InvalidRange(f"n must be at least {MIN_SIGNAL_LENGTH}, got {n}")
    if not t_min < t_max:
        raise InvalidRange(f"need t_min < t_max, got {t_min} and {t_max}")
    if expression_id in _LOG_EXPRESSIONS and t_min < 0:
        raise DomainError(f"{expression_id} takes log(t + 1) and needs t_min >= 0, got {t_min}")

    t = np.linspace(t_min, t_max, n)
    s = EXPRESSIONS[expression_id](t)
    t.setflags(write=False)
    s.setflags(write=False)
    return TruthSignal(expression_id=expression_id, t=t, s=s)


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise UsageError(f"only gaussian noise is supported, got {self.kind!r}")
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise InvalidRange(f"noise sigma must be finite and >= 0, got {self.sigma}")


def add_noise(truth: TruthSignal, spec: NoiseSpec) -> Signal:
    """Return y = s + sigma·g with g standard normal drawn from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(truth.n)
    return Signal.from_values(truth.s + spec.sigma * noise, t=truth.t)


def _values(truth: Union[TruthSignal, ArrayLike]) -> np.ndarray:
    if isinstance(truth, TruthSignal):
        return truth.s
    return np.asarray(truth, dtype=float)


def _paired(truth, estimate) -> Tuple[np.ndarray, np.ndarray]:
    s = _values(truth)
    s_hat = np.asarray(estimate, dtype=float)
    if s.shape != s_hat.shape:
        raise DimensionMismatch(f"truth shape {s.shape} != estimate shape {s_hat.shape}")
    return s, s_hat


def mse(truth: Union[TruthSignal, ArrayLike], estimate: ArrayLike) -> float:
    """Mean squared error (1/n)·Σ(sᵢ - ŝᵢ)²."""
    s, s_hat = _paired(truth, estimate)
    return float(np.mean((s - s_hat) ** 2))


def sum_abs_error(truth: Union[TruthSignal, ArrayLike], estimate: ArrayLike) -> float:
    """Sum of absolute differences Σ|sᵢ - ŝᵢ|, selected with ``--mae``."""
    s, s_hat = _paired(truth, estimate)
    return float(np.sum(np.abs(s - s_hat)))


ERROR_METRICS: Dict[str, Callable[..., float]] = {"mse": mse, "mae": sum_abs_error}


def _error_metric(name: str) -> Callable[..., float]:
    if name not in ERROR_METRICS:
        raise UsageError(f"unknown error metric {name!r}; expected one of {sorted(ERROR_METRICS)}")
    return ERROR_METRICS[name]


def error_curve(truth: TruthSignal, sweep: GridSweep, metric: str = "mse") -> np.ndarray:
    """Error against the truth at every grid λ of a sweep."""
    score = _error_metric(metric)
    return np.array([score(truth, result.s_hat) for result in sweep.results])


def count_local_minima(curve: Sequence[float]) -> int:
    """Number of strict descents followed by an ascent, ignoring flat runs."""
    steps = np.sign(np.diff(np.asarray(curve, dtype=float)))
    steps = steps[steps != 0]
    turns = np.count_nonzero((steps[:-1] < 0) & (steps[1:] > 0))
    # a curve that falls to its last point still has one minimum
    return int(turns) + int(len(steps) > 0 and steps[-1] < 0)


class OptimalLambda(NamedTuple):
    lam: float
    error: float
    index: int


def _oracle_from_curve(grid: LambdaGrid, errors: np.ndarray) -> OptimalLambda:
    index = int(np.argmin(errors))
    minima = count_local_minima(errors)
    if minima > 1:
        logger.warning("error curve has %d local minima over the grid", minima)
    return OptimalLambda(float(grid.values[index]), float(errors[index]), index)


def optimal_lambda(
    truth: TruthSignal,
    noisy: Signal,
    grid: LambdaGrid,
    order: int = 2,
    metric: str = "mse",
    sweep: Optional[GridSweep] = None,
) -> OptimalLambda:
    """Grid λ minimizing the error between truth and smooth; ties go low.

    Returns:
        OptimalLambda(lam, error, index) for the grid minimum.
    """
    if noisy.n != truth.n:
        raise DimensionMismatch(f"noisy length {noisy.n} != truth length {truth.n}")
    if sweep is None or sweep.signal is not noisy or sweep.grid is not grid or sweep.order != order:
        sweep = sweep_grid(noisy, grid, order)
    return _oracle_from_curve(grid, error_curve(truth, sweep, metric))


@dataclass(frozen=True)
class BenchmarkConfig:
    """Simulation protocol parameters.

    Attributes:
        expression_id: Test function name.
        n: Samples per signal.
        t_min: First sample position.
        t_max: Last sample position.
        sigmas: Noise standard deviations.
        trials: Trials per sigma; trial k uses seed base_seed + k.
        grid: λ grid shared by the oracle and the selectors.
        order: Difference order.
        base_seed: Seed offset.
        metric: ``mse`` or ``mae`` (sum of absolute differences).
        hat_method: Leverage method for the CV selector.
        probes: Probe count for the stochastic leverage estimate.
        gap_policy: Residual gap handling for the S-curve.
        workers: Threads running trials concurrently.
    """

    expression_id: str = "sin"
    n: int = 1000
    t_min: float = 0.0
    t_max: float = 4.0 * np.pi
    sigmas: Tuple[float, ...] = (0.05, 0.1, 0.2, 0.35, 0.5)
    trials: int = 20
    grid: LambdaGrid = field(default_factory=lambda_grid)
    order: int = 2
    base_seed: int = 0
    metric: str = "mse"
    hat_method: str = "auto"
    probes: int = 256
    gap_policy: str = "zero-fill"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if not self.sigmas:
            raise InvalidRange("at least one noise level is required")
        if any(not np.isfinite(s) or s < 0 for s in self.sigmas):
            raise InvalidRange(f"noise levels must be finite and >= 0, got {self.sigmas}")
        if self.trials < 1:
            raise InvalidRange(f"trials must be >= 1, got {self.trials}")
        _error_metric(self.metric)

    def selector_settings(self) -> SelectorSettings:
        # trials are the unit of parallelism; each selector runs sequentially
        return SelectorSettings(
            order=self.order,
            grid=self.grid,
            hat_method=self.hat_method,
            probes=self.probes,
            seed=self.base_seed,
            workers=1,
            gap_policy=self.gap_policy,
        )

    def to_metadata(self) -> Dict[str, object]:
        return {
            "expression_id": self.expression_id,
            "n": self.n,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "sigmas": list(self.sigmas),
            "trials": self.trials,
            "grid": [self.grid.decades_min, self.grid.decades_max, self.grid.points_per_decade],
            "order": self.order,
            "base_seed": self.base_seed,
            "metric": self.metric,
            "hat_method": self.hat_method,
        }


@dataclass(frozen=True)
class BenchmarkRecord:
    """One (sigma, trial) outcome; errors use the configured metric."""

    sigma: float
    trial: int
    lambda_opt: float
    mse_opt: float
    lambda_cv: float
    mse_cv: float
    lambda_vc: float
    mse_vc: float
    lambda_s: float
    mse_s: float

    def as_row(self) -> Dict[str, float]:
        return {column: getattr(self, column) for column in REPORT_COLUMNS}


@dataclass(frozen=True)
class TrialFailure:
    sigma: float
    trial: int
    error: str


@dataclass(frozen=True)
class BenchmarkReport:
    records: Tuple[BenchmarkRecord, ...]
    config: BenchmarkConfig
    failures: Tuple[TrialFailure, ...] = ()

    def to_frame(self) -> pd.DataFrame:
        """One row per (sigma, trial) in REPORT_COLUMNS order."""
        frame = pd.DataFrame([record.as_row() for record in self.records], columns=REPORT_COLUMNS)
        return frame.astype({"trial": "int64"})

    def summary(self) -> pd.DataFrame:
        """Per-sigma medians of every λ and error column plus the trial count."""
        frame = self.to_frame()
        grouped = frame.drop(columns="trial").groupby("sigma", sort=True)
        summary = grouped.median()
        summary.insert(0, "trials", grouped.size())
        return summary.reset_index()


def _run_trial(
    config: BenchmarkConfig, truth: TruthSignal, sigma: float, trial: int
) -> BenchmarkRecord:
    noisy = add_noise(truth, NoiseSpec(sigma=sigma, seed=config.base_seed + trial))
    sweep = sweep_grid(noisy, config.grid, config.order)
    errors = error_curve(truth, sweep, config.metric)
    oracle = _oracle_from_curve(config.grid, errors)

    settings = config.selector_settings()
    chosen = {}
    for method in METHODS:
        diagnostics = select_lambda(noisy, method, settings, sweep=sweep)
        index = diagnostics.chosen_index
        suffix = METHOD_COLUMNS[method]
        chosen[f"lambda_{suffix}"] = float(config.grid.values[index])
        chosen[f"mse_{suffix}"] = float(errors[index])

    return BenchmarkRecord(
        sigma=sigma, trial=trial, lambda_opt=oracle.lam, mse_opt=oracle.error, **chosen
    )


def run_benchmark(config: BenchmarkConfig, run_logger=None) -> BenchmarkReport:
    """Run every (sigma, trial) of the protocol.

    A trial that raises a package error is logged and skipped; the report
    holds the surviving records in (sigma, trial) order.

    Args:
        config: Protocol parameters.
        run_logger: Optional RunLogger receiving one entry per trial.

    Returns:
        BenchmarkReport reproducible from ``config`` alone.

    Raises:
        UsageError: If the truth cannot be generated.
        NumericalError: If every trial failed.
    """
    truth = synth_signal(config.expression_id, config.n, config.t_min, config.t_max)
    jobs = [(sigma, trial) for sigma in config.sigmas for trial in range(config.trials)]

    def attempt(job: Tuple[float, int]):
        sigma, trial = job
        started = time.monotonic()
        try:
            outcome = _run_trial(config, truth, sigma, trial)
        except SmootherError as exc:
            outcome = TrialFailure(sigma=sigma, trial=trial, error=f"{type(exc).__name__}: {exc}")
        return outcome, time.monotonic() - started

    records: List[BenchmarkRecord] = []
    failures: List[TrialFailure] = []
    for outcome, elapsed in ordered_map(attempt, jobs, config.workers):
        if isinstance(outcome, TrialFailure):
            logger.warning(
                "skipping trial %d at sigma=%g: %s", outcome.trial, outcome.sigma, outcome.error
            )
            failures.append(outcome)
            if run_logger is not None:
                run_logger.log_trial(outcome.sigma, outcome.trial, "failed", elapsed, error=outcome.error)
            continue
        records.append(outcome)
        if run_logger is not None:
            fields = {k: v for k, v in outcome.as_row().items() if k not in ("sigma", "trial")}
            run_logger.log_trial(outcome.sigma, outcome.trial, "ok", elapsed, **fields)

    if not records:
        raise NumericalError(f"all {len(jobs)} benchmark trials failed")
    logger.info("benchmark finished: %d trials ok, %d skipped", len(records), len(failures))
    return BenchmarkReport(records=tuple(records), config=config, failures=tuple(failures))


def entropy_sweep(
    expression_id: str,
    n: int,
    t_min: float,
    t_max: float,
    sigmas: Sequence[float],
    trials: int,
    base_seed: int = 0,
) -> pd.DataFrame:
    """Median spectral entropy of the noisy truth per noise level.

    Returns:
        DataFrame with columns sigma, median_entropy, trials.
    """
    if trials < 1:
        raise InvalidRange(f"trials must be >= 1, got {trials}")
    truth = synth_signal(expression_id, n, t_min, t_max)
    rows = []
    for sigma in sigmas:
        values = [
            spectral_entropy(add_noise(truth, NoiseSpec(sigma=sigma, seed=base_seed + k)).y).value
            for k in range(trials)
        ]
        rows.append({"sigma": float(sigma), "median_entropy": float(np.median(values)), "trials": trials})
    return pd.DataFrame(rows, columns=["sigma", "median_entropy", "trials"])
