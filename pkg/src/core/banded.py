"""Symmetric banded matrices and the direct solver behind the smoother.

Matrices are stored in LAPACK's lower banded layout (see
:func:`scipy.linalg.solveh_banded`): ``bands[k, j]`` holds ``A[j + k, j]``,
so row 0 is the main diagonal and row k the k-th sub-diagonal. Entries
``bands[k, n - k:]`` fall outside the matrix and are kept at zero.
"""

from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from src.core.errors import (
    DataError,
    DimensionMismatch,
    InvalidOrder,
    InvalidRange,
    NonFiniteInput,
    NotPositiveDefinite,
)


SUPPORTED_ORDERS = (1, 2, 3)


@dataclass(frozen=True, eq=False)
class BandedSymMatrix:
    """Symmetric matrix held as its main diagonal and lower sub-diagonals.

    Attributes:
        bands: Array of shape (bandwidth + 1, n) in lower banded layout.
            A read-only copy is stored.
    """

    bands: np.ndarray

    def __post_init__(self):
        bands = np.array(self.bands, dtype=float, copy=True)
        if bands.ndim != 2:
            raise DimensionMismatch(f"bands must be 2-D, got shape {bands.shape}")
        bandwidth, n = bands.shape[0] - 1, bands.shape[1]
        if bandwidth >= n:
            raise DimensionMismatch(
                f"bandwidth {bandwidth} must be smaller than dimension {n}"
            )
        if not np.all(np.isfinite(bands)):
            raise NonFiniteInput("banded matrix contains non-finite entries")
        for k in range(1, bandwidth + 1):
            bands[k, n - k:] = 0.0
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    @property
    def n(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def to_dense(self) -> np.ndarray:
        """Expand to a full symmetric (n, n) array."""
        dense = np.diag(self.bands[0])
        for k in range(1, self.bandwidth + 1):
            off = self.bands[k, : self.n - k]
            dense += np.diag(off, -k) + np.diag(off, k)
        return dense

    def matvec(self, x: ArrayLike) -> np.ndarray:
        """Multiply by a vector without densifying."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise DimensionMismatch(f"vector length {x.shape[0]} != matrix size {self.n}")
        out = self.bands[0] * x
        for k in range(1, self.bandwidth + 1):
            off = self.bands[k, : self.n - k]
            out[k:] += off * x[: self.n - k]
            out[: self.n - k] += off * x[k:]
        return out


def validate_order(order: int) -> int:
    """Return ``order`` if it is a supported difference order.

    Raises:
        InvalidOrder: If order is not 1, 2 or 3.
    """
    if isinstance(order, bool) or order not in SUPPORTED_ORDERS:
        raise InvalidOrder(f"difference order must be one of {SUPPORTED_ORDERS}, got {order!r}")
    return int(order)


def difference_coefficients(order: int) -> np.ndarray:
    """Row stencil of the order-d difference operator.

    Coefficient k is (-1)^(d-k) * C(d, k), so order 2 gives [1, -2, 1].
    """
    order = validate_order(order)
    return np.array(
        [(-1) ** (order - k) * comb(order, k) for k in range(order + 1)], dtype=float
    )


def penalty_bands(n: int, order: int) -> np.ndarray:
    """Lower bands of DᵀD for the (n - order) x n difference matrix D."""
    coefs = difference_coefficients(order)
    rows = n - order
    bands = np.zeros((order + 1, n))
    # D row r touches columns r..r+order; accumulate every stencil pair at once
    for a in range(order + 1):
        for b in range(a + 1):
            bands[a - b, b : b + rows] += coefs[a] * coefs[b]
    return bands


def banded_from_penalty(
    n: int, order: int, lam: float, weights: ArrayLike
) -> BandedSymMatrix:
    """Build diag(weights) + lam * DᵀD in banded form.

    Args:
        n: Signal length, at least order + 1.
        order: Difference order in {1, 2, 3}; becomes the bandwidth.
        lam: Nonnegative regularization parameter.
        weights: Length-n observation weights, each in [0, 1].

    Returns:
        BandedSymMatrix with bandwidth equal to ``order``.

    Raises:
        InvalidOrder: For an unsupported order.
        InvalidRange: If lam is negative or not finite.
        DimensionMismatch: If n is too small or weights have the wrong length.

    Example:
        >>> banded_from_penalty(3, 1, 1.0, [1, 1, 1]).to_dense()
        array([[ 2., -1.,  0.],
               [-1.,  3., -1.],
               [ 0., -1.,  2.]])
    """
    order = validate_order(order)
    if n < order + 1:
        raise DimensionMismatch(f"need n >= {order + 1} for order {order}, got n={n}")
    if not np.isfinite(lam) or lam < 0:
        raise InvalidRange(f"lambda must be finite and >= 0, got {lam}")
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise DimensionMismatch(f"weights length {w.shape} != n={n}")
    if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
        raise DataError("weights must lie in [0, 1]")

    bands = lam * penalty_bands(n, order)
    bands[0] += w
    return BandedSymMatrix(bands)


def banded_cholesky_factor(a: BandedSymMatrix) -> np.ndarray:
    """Lower Cholesky factor of ``a`` in the same banded layout.

    Raises:
        NotPositiveDefinite: If a pivot is not positive.
    """
    try:
        return cholesky_banded(a.bands, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite ({exc})") from exc


def solve_with_factor(factor: np.ndarray, b: ArrayLike) -> np.ndarray:
    """Solve with a factor from :func:`banded_cholesky_factor`.

    ``b`` may be a vector or an (n, k) block of right-hand sides.
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] != factor.shape[1]:
        raise DimensionMismatch(
            f"right-hand side length {b.shape[0]} != matrix size {factor.shape[1]}"
        )
    return cho_solve_banded((factor, True), b, check_finite=False)


def banded_cholesky_solve(a: BandedSymMatrix, b: ArrayLike) -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    No pivoting is done: a non-positive pivot is reported, never repaired.

    Raises:
        DimensionMismatch: If len(b) != a.n.
        NotPositiveDefinite: If factorization fails.
    """
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.n:
        raise DimensionMismatch(f"right-hand side length {b.shape[0]} != matrix size {a.n}")
    return solve_with_factor(banded_cholesky_factor(a), b)


def banded_inverse_diagonal(factors: ArrayLike) -> np.ndarray:
    """Diagonal of A⁻¹ from the banded Cholesky factor(s) of A.

    Runs the backward selected-inversion recurrence, which only touches
    entries of A⁻¹ inside the band. Several factors of the same shape may be
    stacked along a leading axis; the recurrence is then vectorized across
    them.

    Args:
        factors: Lower banded factor of shape (b + 1, n), or a stack of shape
            (k, b + 1, n).

    Returns:
        Array of shape (n,) or (k, n) matching the input.
    """
    stacked = np.asarray(factors, dtype=float)
    single = stacked.ndim == 2
    if single:
        stacked = stacked[np.newaxis]
    _, width, n = stacked.shape
    bandwidth = width - 1

    # (n, b + 1, k) so every access below is a contiguous vector over k
    low = np.ascontiguousarray(stacked.transpose(2, 1, 0))
    inv_pivot = 1.0 / low[:, 0, :]
    # zband[i, d] = Z[i, i + d] where Z = A⁻¹
    zband = np.zeros_like(low)

    for i in range(n - 1, -1, -1):
        reach = min(bandwidth, n - 1 - i)
        for d in range(reach, 0, -1):
            acc = np.zeros(low.shape[2])
            for s in range(1, reach + 1):
                acc += low[i, s] * zband[i + min(s, d), abs(d - s)]
            zband[i, d] = -acc * inv_pivot[i]
        acc = np.zeros(low.shape[2])
        for s in range(1, reach + 1):
            acc += low[i, s] * zband[i, s]
        zband[i, 0] = (inv_pivot[i] - acc) * inv_pivot[i]

    diag = zband[:, 0, :].T
    return diag[0] if single else diag

