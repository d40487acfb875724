"""Whittaker-Eilers smoothing, fit metrics and hat-matrix diagonals.

The smoother minimizes Σ wᵢ(yᵢ - ŝᵢ)² + λ‖Dŝ‖² for an order-d difference
matrix D on a unit-step grid, i.e. it solves

    (diag(w) + λ DᵀD) ŝ = diag(w) y

with a banded Cholesky factorization. Zero weights mark missing samples;
the smoother fills them from their neighbours.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import quad

from src.core.banded import (
    banded_cholesky_factor,
    banded_from_penalty,
    banded_inverse_diagonal,
    difference_coefficients,
    solve_with_factor,
    validate_order,
)
from src.core.errors import (
    DataError,
    DimensionMismatch,
    DuplicateAbscissa,
    InvalidProbeCount,
    InvalidRange,
    NonFiniteInput,
    NotPositiveDefinite,
    UsageError,
)


logger = logging.getLogger(__name__)

MIN_SIGNAL_LENGTH = 4
HAT_REFERENCE_SIZE = 100
MIN_PROBES = 16
HAT_METHODS = ("small-problem-rescale", "stochastic-probe")

# probes are solved in blocks to bound memory on long signals
_PROBE_BLOCK = 64


def _frozen(values: ArrayLike) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """Observed series on an index grid.

    Attributes:
        t: Sample positions, strictly increasing.
        y: Observed values; only entries with w > 0 need to be finite.
        w: Observation weights in [0, 1]; 0 marks a missing sample.
    """

    t: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        t, y, w = _frozen(self.t), _frozen(self.y), _frozen(self.w)
        if not (t.ndim == y.ndim == w.ndim == 1) or not (len(t) == len(y) == len(w)):
            raise DimensionMismatch(
                f"t, y, w must be 1-D with equal length, got {t.shape}, {y.shape}, {w.shape}"
            )
        if len(t) < MIN_SIGNAL_LENGTH:
            raise DimensionMismatch(f"signal needs at least {MIN_SIGNAL_LENGTH} samples, got {len(t)}")
        if not np.all(np.isfinite(t)):
            raise NonFiniteInput("sample positions must be finite")
        steps = np.diff(t)
        if np.any(steps == 0):
            raise DuplicateAbscissa("sample positions must be distinct")
        if np.any(steps < 0):
            raise DataError("sample positions must be increasing")
        if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise DataError("weights must lie in [0, 1]")
        if not np.all(np.isfinite(y[w > 0])):
            raise NonFiniteInput("observed values must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_values(
        cls,
        y: ArrayLike,
        t: Optional[ArrayLike] = None,
        w: Optional[ArrayLike] = None,
    ) -> "Signal":
        """Build a signal with index positions and unit weights by default."""
        y = np.asarray(y, dtype=float)
        t = np.arange(len(y), dtype=float) if t is None else t
        w = np.ones(len(y)) if w is None else w
        return cls(t=t, y=y, w=w)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def observed(self) -> np.ndarray:
        """Boolean mask of samples with positive weight."""
        return self.w > 0

    @property
    def n_observed(self) -> int:
        return int(np.count_nonzero(self.observed))

    @property
    def observed_y(self) -> np.ndarray:
        """y with every gap replaced by 0."""
        return np.where(self.observed, self.y, 0.0)

    @property
    def weighted_y(self) -> np.ndarray:
        return self.w * self.observed_y

    def with_values(self, y: ArrayLike) -> "Signal":
        return Signal(t=self.t, y=y, w=self.w)

    def with_weights(self, w: ArrayLike) -> "Signal":
        return Signal(t=self.t, y=self.y, w=w)

    def is_uniformly_spaced(self, rtol: float = 1e-6) -> bool:
        steps = np.diff(self.t)
        return bool(np.allclose(steps, steps[0], rtol=rtol, atol=0.0))


@dataclass(frozen=True)
class DifferenceOperator:
    """Order-d finite-difference matrix with n - d rows, kept implicit."""

    order: int
    n: int

    def __post_init__(self):
        validate_order(self.order)
        if self.n < self.order + 1:
            raise DimensionMismatch(f"need n >= {self.order + 1} for order {self.order}, got {self.n}")

    @property
    def rows(self) -> int:
        return self.n - self.order

    @property
    def coefficients(self) -> np.ndarray:
        return difference_coefficients(self.order)

    def apply(self, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"vector length {x.shape} != operator width {self.n}")
        return np.diff(x, n=self.order)

    def to_dense(self) -> np.ndarray:
        return np.diff(np.eye(self.n), n=self.order, axis=0)


def difference_apply(op: DifferenceOperator, x: ArrayLike) -> np.ndarray:
    """Return Dx, of length n - order.

    Example:
        >>> difference_apply(DifferenceOperator(order=2, n=4), [0, 1, 4, 9])
        array([2., 2.])
    """
    return op.apply(x)


@dataclass(frozen=True, eq=False)
class SmoothResult:
    """Outcome of one smoothing run.

    Attributes:
        s_hat: Smoothed values at every sample, gaps included.
        lam: Regularization parameter used.
        order: Difference order of the penalty.
        residuals: y - s_hat at observed samples and exactly 0 at gaps.
    """

    s_hat: np.ndarray
    lam: float
    order: int
    residuals: np.ndarray


class FitMetrics(NamedTuple):
    R: float
    S: float
    Q: float


def _check_solvable(signal: Signal, lam: float, order: int) -> None:
    if not np.isfinite(lam) or lam < 0:
        raise InvalidRange(f"lambda must be finite and >= 0, got {lam}")
    if signal.n < order + 1:
        raise DimensionMismatch(f"need n >= {order + 1} for order {order}, got n={signal.n}")
    if signal.n_observed < order + 1:
        raise NotPositiveDefinite(
            f"only {signal.n_observed} observed samples; order {order} needs at least {order + 1}"
        )
    if lam == 0 and signal.n_observed < signal.n:
        raise NotPositiveDefinite("lambda = 0 cannot fill gaps; all weights must be positive")


def whittaker_factor(signal: Signal, lam: float, order: int = 2) -> np.ndarray:
    """Banded Cholesky factor of diag(w) + λDᵀD for this signal."""
    order = validate_order(order)
    _check_solvable(signal, lam, order)
    system = banded_from_penalty(signal.n, order, lam, signal.w)
    return banded_cholesky_factor(system)


def result_from_factor(
    signal: Signal, lam: float, order: int, factor: np.ndarray
) -> SmoothResult:
    """Finish a smoothing run from an existing factor."""
    s_hat = solve_with_factor(factor, signal.weighted_y)
    residuals = np.where(signal.observed, signal.observed_y - s_hat, 0.0)
    return SmoothResult(s_hat=_frozen(s_hat), lam=float(lam), order=order, residuals=_frozen(residuals))


def whittaker_smooth(signal: Signal, lam: float, order: int = 2) -> SmoothResult:
    """Smooth a signal with the Whittaker-Eilers penalty.

    Args:
        signal: Observed series.
        lam: Regularization parameter, >= 0. Zero is only allowed without gaps.
        order: Difference order in {1, 2, 3}.

    Returns:
        SmoothResult with s_hat solving (diag(w) + λDᵀD) s_hat = diag(w) y.

    Raises:
        InvalidOrder: Unsupported order.
        NotPositiveDefinite: Too many gaps for the order, or λ = 0 with gaps.

    Example:
        >>> sig = Signal.from_values([1.0, 2.0, 3.0, 4.0, 6.0])
        >>> whittaker_smooth(sig, 0.0, order=1).s_hat
        array([1., 2., 3., 4., 6.])
    """
    factor = whittaker_factor(signal, lam, order)
    return result_from_factor(signal, lam, int(order), factor)


def fit_metrics(signal: Signal, result: SmoothResult) -> FitMetrics:
    """Residual R = Σ w r², roughness S = ‖D ŝ‖² and objective Q = R + λS."""
    if result.s_hat.shape != (signal.n,):
        raise DimensionMismatch(
            f"result length {result.s_hat.shape} does not match signal length {signal.n}"
        )
    rss = float(np.sum(signal.w * result.residuals ** 2))
    roughness = float(np.sum(np.diff(result.s_hat, n=result.order) ** 2))
    return FitMetrics(R=rss, S=roughness, Q=rss + result.lam * roughness)


def hat_diagonals_exact(
    signal: Signal,
    lambdas: Sequence[float],
    order: int = 2,
    factors: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exact hat diagonals for several λ at once.

    diag(H) with H = (diag(w) + λDᵀD)⁻¹ diag(w), computed by selected
    inversion of the banded factor rather than a dense inverse.

    Args:
        signal: Observed series.
        lambdas: Regularization values.
        order: Difference order.
        factors: Optional precomputed factors, shape (len(lambdas), order + 1, n).

    Returns:
        Array of shape (len(lambdas), n) with entries in [0, 1].
    """
    if factors is None:
        factors = np.stack([whittaker_factor(signal, lam, order) for lam in lambdas])
    inverse_diag = banded_inverse_diagonal(factors)
    return np.clip(inverse_diag * signal.w, 0.0, 1.0)


def hat_diagonal_exact(signal: Signal, lam: float, order: int = 2) -> np.ndarray:
    """Exact diagonal of the hat matrix at one λ. Intended for n <= 2000."""
    return hat_diagonals_exact(signal, [lam], order)[0]


def stationary_leverage(lam: float, order: int) -> float:
    """Interior hat diagonal of an unbounded unit-weight problem.

    Evaluates (1/π) ∫₀^π dω / (1 + λ (2 sin(ω/2))^(2d)).
    """
    if lam <= 0:
        return 1.0
    power = 2 * validate_order(order)
    width = lam ** (1.0 / power)
    knee = min(np.pi / 2, 1.0 / width)

    def integrand(omega: float) -> float:
        return 1.0 / (1.0 + lam * (2.0 * np.sin(omega / 2.0)) ** power)

    value, _ = quad(integrand, 0.0, np.pi, points=[knee], limit=200)
    return value / np.pi


def _rescaled_profile(n: int, lam: float, order: int, reference_size: int) -> np.ndarray:
    reference = Signal.from_values(np.zeros(reference_size))
    width = lam ** (1.0 / (2 * order)) if lam > 0 else 0.0

    if width <= reference_size / 10:
        # narrow kernel: boundary layers do not depend on n, splice them on
        small = hat_diagonal_exact(reference, lam, order)
        half = reference_size // 2
        profile = np.full(n, stationary_leverage(lam, order))
        profile[:half] = small[:half]
        profile[n - half:] = small[reference_size - half:]
        return profile

    lam_small = lam * (reference_size / n) ** (2 * order)
    small = hat_diagonal_exact(reference, lam_small, order)
    profile = np.interp(np.linspace(0.0, 1.0, n), np.linspace(0.0, 1.0, reference_size), small)
    return profile * (stationary_leverage(lam, order) / stationary_leverage(lam_small, order))


def _probe_diagonal(
    signal: Signal, lam: float, order: int, probes: int, seed: int
) -> np.ndarray:
    factor = whittaker_factor(signal, lam, order)
    rng = np.random.default_rng(seed)
    total = np.zeros(signal.n)
    remaining = probes
    while remaining > 0:
        block = min(_PROBE_BLOCK, remaining)
        z = rng.integers(0, 2, size=(signal.n, block)).astype(float) * 2.0 - 1.0
        hz = solve_with_factor(factor, signal.w[:, np.newaxis] * z)
        total += np.sum(z * hz, axis=1)
        remaining -= block
    return np.where(signal.observed, total / probes, 0.0)


def hat_diagonal_estimate(
    signal: Signal,
    lam: float,
    order: int = 2,
    method: str = "small-problem-rescale",
    probes: int = 256,
    seed: int = 0,
    reference_size: int = HAT_REFERENCE_SIZE,
) -> np.ndarray:
    """Approximate hat diagonal for long signals.

    ``small-problem-rescale`` computes the exact diagonal of a size-100
    unit-weight problem and maps its profile onto n points by relative
    position, with λ rescaled by (100/n)^(2·order) and the interior level
    calibrated to :func:`stationary_leverage`. When the smoothing kernel
    spans at most a tenth of the reference size, the reference problem is
    solved at the unscaled λ and its two halves become the boundary layers.
    Gaps are applied as hᵢ ≈ wᵢ·profileᵢ.

    ``stochastic-probe`` is Hutchinson's estimator: the mean of z ⊙ (H z)
    over Rademacher probes z drawn from ``seed``.

    Raises:
        DimensionMismatch: n below the reference size for the rescale method.
        InvalidProbeCount: Fewer than 16 probes.
        NotPositiveDefinite: Unsolvable system.
    """
    order = validate_order(order)
    _check_solvable(signal, lam, order)

    if method == "small-problem-rescale":
        if signal.n < reference_size:
            raise DimensionMismatch(
                f"small-problem rescaling needs n >= {reference_size}, got {signal.n}"
            )
        profile = _rescaled_profile(signal.n, lam, order, reference_size)
        return np.clip(profile * signal.w, 0.0, 1.0)

    if method == "stochastic-probe":
        if probes < MIN_PROBES:
            raise InvalidProbeCount(f"need at least {MIN_PROBES} probes, got {probes}")
        logger.debug("Hutchinson estimate with %d probes at lambda=%g", probes, lam)
        return _probe_diagonal(signal, lam, order, probes, seed)

    raise UsageError(f"unknown hat estimation method {method!r}; expected one of {HAT_METHODS}")
