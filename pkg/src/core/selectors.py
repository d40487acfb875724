"""Automatic selection of the regularization parameter λ.

Three selectors share one logarithmic λ grid:

- ``cv``: leave-one-out cross-validation through the leverage identity
  yᵢ - ŷ₋ᵢ = (yᵢ - ŷᵢ) / (1 - hᵢᵢ), minimized over the grid.
- ``vcurve``: distances between consecutive L-curve points (log R, log S),
  minimized.
- ``scurve``: distances between consecutive points (log H_res, log H_Dŝ)
  of spectral entropies, maximized up to the peak of H_res.

Distance curves are indexed by the geometric mean of adjacent λ values.
Ties always resolve toward the smaller λ.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.banded import validate_order
from src.core.errors import AllPointsDegenerate, DegenerateHat, InvalidRange, UsageError
from src.core.smoother import (
    Signal,
    SmoothResult,
    fit_metrics,
    hat_diagonal_estimate,
    hat_diagonals_exact,
    result_from_factor,
    whittaker_factor,
    whittaker_smooth,
)
from src.core.spectral import spectral_entropy
from src.utils.parallel import ordered_map


logger = logging.getLogger(__name__)

METHODS = ("cv", "vcurve", "scurve")
HAT_CHOICES = ("auto", "exact", "small-problem-rescale", "stochastic-probe")
GAP_POLICIES = ("zero-fill", "compact")

DEFAULT_DECADES = (-2.0, 8.0)
DEFAULT_POINTS_PER_DECADE = 10
EXACT_HAT_MAX_N = 2000
MIN_CURVE_POINTS = 3
DEGENERATE_HAT_GAP = 1e-12
ENTROPY_FLOOR = 1e-12
METRIC_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class LambdaGrid:
    """Strictly increasing, log-uniform λ values."""

    values: np.ndarray
    decades_min: float
    decades_max: float
    points_per_decade: int

    def __len__(self) -> int:
        return len(self.values)

    def midpoints(self) -> np.ndarray:
        """Geometric means of neighbouring values."""
        return np.sqrt(self.values[:-1] * self.values[1:])


def lambda_grid(
    decades_min: float = DEFAULT_DECADES[0],
    decades_max: float = DEFAULT_DECADES[1],
    points_per_decade: int = DEFAULT_POINTS_PER_DECADE,
) -> LambdaGrid:
    """Values 10^u for u uniformly spaced over [decades_min, decades_max].

    The number of values is round((max - min) * points_per_decade) + 1, so
    both endpoints are always included.

    Raises:
        InvalidRange: If the bounds are reversed or points_per_decade < 1.

    Example:
        >>> lambda_grid(0, 2, 1).values
        array([  1.,  10., 100.])
    """
    if not (np.isfinite(decades_min) and np.isfinite(decades_max)) or decades_min >= decades_max:
        raise InvalidRange(f"need decades_min < decades_max, got {decades_min} and {decades_max}")
    if points_per_decade < 1:
        raise InvalidRange(f"points_per_decade must be >= 1, got {points_per_decade}")
    count = max(2, int(round((decades_max - decades_min) * points_per_decade)) + 1)
    exponents = np.linspace(decades_min, decades_max, count)
    values = 10.0 ** exponents
    values.setflags(write=False)
    return LambdaGrid(
        values=values,
        decades_min=float(decades_min),
        decades_max=float(decades_max),
        points_per_decade=int(points_per_decade),
    )


@dataclass(frozen=True, eq=False)
class GridSweep:
    """One smoothing per grid λ, with the Cholesky factors kept for reuse."""

    signal: Signal
    grid: LambdaGrid
    order: int
    factors: np.ndarray
    results: Tuple[SmoothResult, ...]


def sweep_grid(signal: Signal, grid: LambdaGrid, order: int = 2, workers: int = 1) -> GridSweep:
    """Factor and smooth the signal at every grid λ."""
    order = validate_order(order)

    def smooth_at(lam: float) -> Tuple[np.ndarray, SmoothResult]:
        factor = whittaker_factor(signal, lam, order)
        return factor, result_from_factor(signal, lam, order, factor)

    pairs = ordered_map(smooth_at, grid.values, workers)
    return GridSweep(
        signal=signal,
        grid=grid,
        order=order,
        factors=np.stack([factor for factor, _ in pairs]),
        results=tuple(result for _, result in pairs),
    )


def _resolve_sweep(
    signal: Signal, grid: LambdaGrid, order: int, sweep: Optional[GridSweep], workers: int
) -> GridSweep:
    if sweep is not None and sweep.signal is signal and sweep.grid is grid and sweep.order == order:
        return sweep
    return sweep_grid(signal, grid, order, workers)


@dataclass(frozen=True, eq=False)
class CurvePoints:
    """Usable points of a parametric curve over the grid.

    Attributes:
        points: Array (k, 2) of curve coordinates.
        lambdas: Grid λ of each point.
        indices: Grid index of each point.
        dropped: Grid indices skipped as degenerate.
    """

    points: np.ndarray
    lambdas: np.ndarray
    indices: np.ndarray
    dropped: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class SelectionDiagnostics:
    """Per-λ selection curve and the choice made on it.

    Attributes:
        method: One of ``cv``, ``vcurve``, ``scurve``.
        grid: The λ grid evaluated.
        curve_x: λ for cv; geometric-mean λ for the distance curves.
        curve_y: σ_cv, V-distance or S-distance.
        aux: L-curve or S-curve points (None for cv).
        chosen_lambda: Selected λ, a member of curve_x.
        chosen_index: Grid index of the choice (lower endpoint for distances).
        dropped: Grid indices removed as degenerate.
    """

    method: str
    grid: LambdaGrid
    curve_x: np.ndarray
    curve_y: np.ndarray
    aux: Optional[CurvePoints]
    chosen_lambda: float
    chosen_index: int
    dropped: Tuple[int, ...] = ()

    @property
    def curve_index(self) -> int:
        """Position of the choice within curve_x."""
        return int(np.flatnonzero(self.curve_x == self.chosen_lambda)[0])


def consecutive_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance between each pair of neighbouring points."""
    points = np.asarray(points, dtype=float)
    return np.linalg.norm(np.diff(points, axis=0), axis=1)


def pick_extremum(values: Sequence[float], mode: str) -> int:
    """Index of the global min or max; the first (smallest λ) wins ties."""
    values = np.asarray(values, dtype=float)
    if mode == "min":
        return int(np.argmin(values))
    if mode == "max":
        return int(np.argmax(values))
    raise UsageError(f"mode must be 'min' or 'max', got {mode!r}")


def _resolve_hat_method(hat_method: str, n: int) -> str:
    if hat_method not in HAT_CHOICES:
        raise UsageError(f"unknown hat method {hat_method!r}; expected one of {HAT_CHOICES}")
    if hat_method == "auto":
        return "exact" if n <= EXACT_HAT_MAX_N else "small-problem-rescale"
    return hat_method


def cv_curve(
    signal: Signal,
    grid: LambdaGrid,
    order: int = 2,
    hat_method: str = "auto",
    probes: int = 256,
    seed: int = 0,
    sweep: Optional[GridSweep] = None,
    workers: int = 1,
) -> SelectionDiagnostics:
    """Leave-one-out cross-validation error σ_cv over the grid.

    σ_cv = sqrt(Σ ((yᵢ - ŷᵢ) / (1 - hᵢᵢ))² / m) over the m observed samples.

    Raises:
        DegenerateHat: If 1 - hᵢᵢ < 1e-12 at an observed sample.
    """
    order = validate_order(order)
    sweep = _resolve_sweep(signal, grid, order, sweep, workers)
    method = _resolve_hat_method(hat_method, signal.n)

    if method == "exact":
        leverages = hat_diagonals_exact(signal, grid.values, order, factors=sweep.factors)
    else:
        leverages = np.stack(
            ordered_map(
                lambda lam: hat_diagonal_estimate(signal, lam, order, method, probes=probes, seed=seed),
                grid.values,
                workers,
            )
        )

    observed = signal.observed
    sigma = np.empty(len(grid))
    for j, result in enumerate(sweep.results):
        gap = 1.0 - leverages[j, observed]
        if np.any(gap < DEGENERATE_HAT_GAP):
            raise DegenerateHat(f"leverage reached 1 at lambda={grid.values[j]:g}")
        loo = result.residuals[observed] / gap
        sigma[j] = np.sqrt(np.sum(loo ** 2) / signal.n_observed)

    k = pick_extremum(sigma, "min")
    logger.debug("cv chose lambda=%g (index %d)", grid.values[k], k)
    return SelectionDiagnostics(
        method="cv",
        grid=grid,
        curve_x=grid.values.copy(),
        curve_y=sigma,
        aux=None,
        chosen_lambda=float(grid.values[k]),
        chosen_index=k,
    )


def _collect_points(
    grid: LambdaGrid, candidates: Sequence[Optional[Tuple[float, float]]], label: str
) -> CurvePoints:
    kept = [j for j, point in enumerate(candidates) if point is not None]
    dropped = tuple(j for j, point in enumerate(candidates) if point is None)
    if dropped:
        logger.warning("%s: dropped %d degenerate grid point(s)", label, len(dropped))
    if len(kept) < MIN_CURVE_POINTS:
        raise AllPointsDegenerate(
            f"{label}: only {len(kept)} usable grid points, need {MIN_CURVE_POINTS}"
        )
    indices = np.array(kept, dtype=int)
    return CurvePoints(
        points=np.array([candidates[j] for j in kept], dtype=float),
        lambdas=grid.values[indices],
        indices=indices,
        dropped=dropped,
    )


def lv_points(
    signal: Signal,
    grid: LambdaGrid,
    order: int = 2,
    sweep: Optional[GridSweep] = None,
    workers: int = 1,
) -> CurvePoints:
    """L-curve points (ln R, ln S) per grid λ.

    Raises:
        AllPointsDegenerate: Fewer than 3 points with R and S above underflow.
    """
    order = validate_order(order)
    sweep = _resolve_sweep(signal, grid, order, sweep, workers)

    candidates = []
    for result in sweep.results:
        metrics = fit_metrics(signal, result)
        if metrics.R <= METRIC_FLOOR or metrics.S <= METRIC_FLOOR:
            candidates.append(None)
        else:
            candidates.append((np.log(metrics.R), np.log(metrics.S)))
    return _collect_points(grid, candidates, "L-curve")


def _select_on_distances(
    method: str, grid: LambdaGrid, curve: CurvePoints, mode: str, limit: Optional[int] = None
) -> SelectionDiagnostics:
    distances = consecutive_distances(curve.points)
    abscissa = np.sqrt(curve.lambdas[:-1] * curve.lambdas[1:])
    # only the first `limit` distances are eligible
    k = pick_extremum(distances if not limit else distances[:limit], mode)
    logger.debug("%s chose lambda=%g (curve index %d)", method, abscissa[k], k)
    return SelectionDiagnostics(
        method=method,
        grid=grid,
        curve_x=abscissa,
        curve_y=distances,
        aux=curve,
        chosen_lambda=float(abscissa[k]),
        chosen_index=int(curve.indices[k]),
        dropped=curve.dropped,
    )


def select_vcurve(
    signal: Signal,
    grid: LambdaGrid,
    order: int = 2,
    sweep: Optional[GridSweep] = None,
    workers: int = 1,
) -> SelectionDiagnostics:
    """Pick the λ where consecutive L-curve points are closest."""
    curve = lv_points(signal, grid, order, sweep=sweep, workers=workers)
    return _select_on_distances("vcurve", grid, curve, "min")


def scurve_points(
    signal: Signal,
    grid: LambdaGrid,
    order: int = 2,
    sweep: Optional[GridSweep] = None,
    gap_policy: str = "zero-fill",
    workers: int = 1,
) -> CurvePoints:
    """Spectral-entropy points (ln H_res, ln H_Dŝ) per grid λ.

    H_res is the entropy of the residuals, with gaps either zero-filled or
    removed (``gap_policy``); H_Dŝ the entropy of the differenced smooth.
    Points where either entropy is at most 1e-12 are dropped.

    Raises:
        AllPointsDegenerate: Fewer than 3 usable points.
    """
    if gap_policy not in GAP_POLICIES:
        raise UsageError(f"unknown gap policy {gap_policy!r}; expected one of {GAP_POLICIES}")
    order = validate_order(order)
    sweep = _resolve_sweep(signal, grid, order, sweep, workers)

    def entropy_point(result: SmoothResult) -> Optional[Tuple[float, float]]:
        residuals = result.residuals
        if gap_policy == "compact":
            residuals = residuals[signal.observed]
        h_res = spectral_entropy(residuals)
        h_smooth = spectral_entropy(np.diff(result.s_hat, n=order))
        if h_res.value <= ENTROPY_FLOOR or h_smooth.value <= ENTROPY_FLOOR:
            return None
        return np.log(h_res.value), np.log(h_smooth.value)

    candidates = ordered_map(entropy_point, sweep.results, workers)
    return _collect_points(grid, candidates, "S-curve")


def select_scurve(
    signal: Signal,
    grid: LambdaGrid,
    order: int = 2,
    sweep: Optional[GridSweep] = None,
    gap_policy: str = "zero-fill",
    workers: int = 1,
) -> SelectionDiagnostics:
    """Pick the λ at the largest S-distance up to the residual-entropy peak.

    Past the peak H_res collapses as the smooth flattens the signal itself,
    which can open a second, larger gap between points; that over-smoothing
    branch is not eligible. A curve whose H_res peaks at its first point is
    searched whole.
    """
    curve = scurve_points(signal, grid, order, sweep=sweep, gap_policy=gap_policy, workers=workers)
    peak = residual_entropy_peak(curve)
    if peak < len(curve.points) - 1:
        logger.debug("scurve: residual entropy peaks at curve index %d", peak)
    return _select_on_distances("scurve", grid, curve, "max", limit=peak)


def residual_entropy_peak(curve: CurvePoints) -> int:
    """Curve index of the largest ln H_res; the first wins ties."""
    return int(np.argmax(curve.points[:, 0]))


@dataclass(frozen=True)
class SelectorSettings:
    """Everything a selector needs besides the signal."""

    order: int = 2
    grid: LambdaGrid = field(default_factory=lambda_grid)
    hat_method: str = "auto"
    probes: int = 256
    seed: int = 0
    workers: int = 1
    gap_policy: str = "zero-fill"

    def __post_init__(self):
        validate_order(self.order)
        if self.hat_method not in HAT_CHOICES:
            raise UsageError(f"unknown hat method {self.hat_method!r}; expected one of {HAT_CHOICES}")
        if self.gap_policy not in GAP_POLICIES:
            raise UsageError(f"unknown gap policy {self.gap_policy!r}; expected one of {GAP_POLICIES}")

    def with_order(self, order: int) -> "SelectorSettings":
        return SelectorSettings(
            order=order,
            grid=self.grid,
            hat_method=self.hat_method,
            probes=self.probes,
            seed=self.seed,
            workers=self.workers,
            gap_policy=self.gap_policy,
        )


def select_lambda(
    signal: Signal,
    method: str,
    settings: SelectorSettings,
    sweep: Optional[GridSweep] = None,
) -> SelectionDiagnostics:
    """Run one selector by name."""
    if method == "cv":
        return cv_curve(
            signal,
            settings.grid,
            settings.order,
            hat_method=settings.hat_method,
            probes=settings.probes,
            seed=settings.seed,
            sweep=sweep,
            workers=settings.workers,
        )
    if method == "vcurve":
        return select_vcurve(signal, settings.grid, settings.order, sweep=sweep, workers=settings.workers)
    if method == "scurve":
        return select_scurve(
            signal,
            settings.grid,
            settings.order,
            sweep=sweep,
            gap_policy=settings.gap_policy,
            workers=settings.workers,
        )
    raise UsageError(f"unknown selection method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True, eq=False)
class OrderStudyEntry:
    order: int
    diagnostics: SelectionDiagnostics
    result: SmoothResult


def order_study(
    signal: Signal,
    settings: SelectorSettings,
    orders: Sequence[int] = (1, 2, 3),
    method: str = "scurve",
) -> List[OrderStudyEntry]:
    """Select λ and smooth separately for each difference order."""
    entries = []
    for order in orders:
        per_order = settings.with_order(order)
        diagnostics = select_lambda(signal, method, per_order)
        result = whittaker_smooth(signal, diagnostics.chosen_lambda, order)
        logger.info("order %d: %s chose lambda=%.6g", order, method, diagnostics.chosen_lambda)
        entries.append(OrderStudyEntry(order=order, diagnostics=diagnostics, result=result))
    return entries
