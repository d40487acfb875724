"""Unit tests for banded module."""

import numpy as np
import pytest

from src.core.banded import (
    BandedSymMatrix,
    banded_cholesky_factor,
    banded_cholesky_solve,
    banded_from_penalty,
    banded_inverse_diagonal,
    difference_coefficients,
    penalty_bands,
)
from src.core.errors import (
    DataError,
    DimensionMismatch,
    InvalidOrder,
    InvalidRange,
    NonFiniteInput,
    NotPositiveDefinite,
)


class TestBandedSymMatrix:
    """Tests for BandedSymMatrix."""

    def test_to_dense_is_symmetric(self):
        """Test that the dense expansion mirrors the lower bands."""
        bands = np.array([[4.0, 5.0, 6.0, 7.0], [1.0, 2.0, 3.0, 0.0]])
        dense = BandedSymMatrix(bands).to_dense()

        expected = np.array(
            [[4.0, 1.0, 0.0, 0.0], [1.0, 5.0, 2.0, 0.0], [0.0, 2.0, 6.0, 3.0], [0.0, 0.0, 3.0, 7.0]]
        )
        np.testing.assert_array_equal(dense, expected)

    def test_out_of_range_entries_are_zeroed(self):
        """Test that storage slots past the matrix edge are forced to zero."""
        matrix = BandedSymMatrix(np.array([[1.0, 1.0, 1.0], [0.5, 0.5, 99.0]]))

        assert matrix.bands[1, 2] == 0.0

    def test_bandwidth_must_be_smaller_than_n(self):
        """Test that DimensionMismatch is raised when bandwidth >= n."""
        with pytest.raises(DimensionMismatch):
            BandedSymMatrix(np.ones((4, 3)))

    def test_non_finite_rejected(self):
        """Test that NaN entries are rejected."""
        with pytest.raises(NonFiniteInput):
            BandedSymMatrix(np.array([[1.0, np.nan, 1.0]]))

    def test_bands_are_read_only(self):
        """Test that the stored bands cannot be modified in place."""
        matrix = BandedSymMatrix(np.ones((1, 4)))

        with pytest.raises(ValueError):
            matrix.bands[0, 0] = 2.0

    def test_matvec_matches_dense(self, rng):
        """Test that matvec agrees with the dense product."""
        matrix = banded_from_penalty(30, 3, 2.5, rng.uniform(0, 1, 30))
        x = rng.standard_normal(30)

        np.testing.assert_allclose(matrix.matvec(x), matrix.to_dense() @ x, rtol=1e-13, atol=1e-12)


class TestDifferenceCoefficients:
    """Tests for difference_coefficients function."""

    @pytest.mark.parametrize(
        "order,expected",
        [(1, [-1, 1]), (2, [1, -2, 1]), (3, [-1, 3, -3, 1])],
    )
    def test_stencils(self, order, expected):
        """Test the alternating-sign binomial stencils."""
        np.testing.assert_array_equal(difference_coefficients(order), expected)

    @pytest.mark.parametrize("order", [0, 4, -1, True])
    def test_invalid_order(self, order):
        """Test that orders outside {1, 2, 3} raise InvalidOrder."""
        with pytest.raises(InvalidOrder):
            difference_coefficients(order)


class TestBandedFromPenalty:
    """Tests for banded_from_penalty function."""

    def test_order_one_example(self):
        """Test n=3, order 1, lambda 1 against the hand-expanded matrix."""
        dense = banded_from_penalty(3, 1, 1.0, [1, 1, 1]).to_dense()

        np.testing.assert_array_equal(dense, [[2, -1, 0], [-1, 3, -1], [0, -1, 2]])

    def test_zero_lambda_gives_identity(self):
        """Test that lambda 0 with unit weights leaves the identity."""
        dense = banded_from_penalty(6, 2, 0.0, np.ones(6)).to_dense()

        np.testing.assert_array_equal(dense, np.eye(6))

    def test_bandwidth_equals_order(self):
        """Test that the penalty bandwidth equals the difference order."""
        for order in (1, 2, 3):
            assert banded_from_penalty(10, order, 1.0, np.ones(10)).bandwidth == order

    def test_matches_explicit_product(self, rng, dense):
        """Test randomized instances against diag(w) + lambda DᵀD."""
        for _ in range(60):
            order = int(rng.integers(1, 4))
            n = int(rng.integers(order + 1, 201))
            lam = 10.0 ** rng.uniform(-2, 6)
            w = rng.uniform(0, 1, n)
            w[rng.uniform(size=n) < 0.2] = 0.0

            banded = banded_from_penalty(n, order, lam, w).to_dense()
            expected = dense.system(n, order, lam, w)

            np.testing.assert_allclose(banded, expected, rtol=1e-13, atol=1e-13 * max(1.0, lam))

    def test_penalty_bands_of_second_order(self):
        """Test the lower bands of DᵀD for order 2, n=5."""
        bands = penalty_bands(5, 2)

        np.testing.assert_array_equal(bands[0], [1, 5, 6, 5, 1])
        np.testing.assert_array_equal(bands[1], [-2, -4, -4, -2, 0])
        np.testing.assert_array_equal(bands[2], [1, 1, 1, 0, 0])

    def test_too_small_n(self):
        """Test that n < order + 1 raises DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            banded_from_penalty(2, 2, 1.0, np.ones(2))

    def test_weight_length_mismatch(self):
        """Test that a wrong weight length raises DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            banded_from_penalty(5, 1, 1.0, np.ones(4))

    def test_negative_lambda(self):
        """Test that a negative lambda raises InvalidRange."""
        with pytest.raises(InvalidRange):
            banded_from_penalty(5, 1, -1.0, np.ones(5))

    def test_weights_outside_unit_interval(self):
        """Test that weights above 1 are rejected."""
        with pytest.raises(DataError):
            banded_from_penalty(5, 1, 1.0, [1, 1, 2, 1, 1])


class TestBandedCholeskySolve:
    """Tests for banded_cholesky_solve function."""

    def test_identity(self):
        """Test that the identity returns the right-hand side."""
        identity = BandedSymMatrix(np.ones((1, 5)))
        b = np.array([1.0, 2.0, 3.0, 4.0, 5.0])

        np.testing.assert_array_equal(banded_cholesky_solve(identity, b), b)

    def test_tridiagonal_matches_dense(self, dense):
        """Test I + DᵀD (order 1, n=4) against a dense solve."""
        matrix = banded_from_penalty(4, 1, 1.0, np.ones(4))
        expected = np.linalg.solve(dense.system(4, 1, 1.0, np.ones(4)), np.ones(4))

        np.testing.assert_allclose(banded_cholesky_solve(matrix, np.ones(4)), expected, rtol=0, atol=1e-12)

    def test_zero_pivot(self):
        """Test that a zero diagonal entry raises NotPositiveDefinite."""
        matrix = BandedSymMatrix(np.array([[0.0, 1.0, 1.0, 1.0]]))

        with pytest.raises(NotPositiveDefinite):
            banded_cholesky_solve(matrix, np.ones(4))

    def test_all_zero_weights_are_singular(self):
        """Test that lambda DᵀD alone (constants in its null space) is rejected."""
        matrix = banded_from_penalty(3, 1, 1.0, np.zeros(3))

        with pytest.raises(NotPositiveDefinite):
            banded_cholesky_solve(matrix, np.ones(3))

    def test_length_mismatch(self):
        """Test that a wrong right-hand side length raises DimensionMismatch."""
        matrix = banded_from_penalty(4, 1, 1.0, np.ones(4))

        with pytest.raises(DimensionMismatch):
            banded_cholesky_solve(matrix, np.ones(5))

    def test_randomized_against_dense(self, rng, dense):
        """Test 100 random SPD penalty systems against a dense solver."""
        for _ in range(100):
            order = int(rng.integers(1, 4))
            n = int(rng.integers(order + 5, 201))
            lam = 10.0 ** rng.uniform(-2, 3)
            w = rng.uniform(0.2, 1, n)
            w[rng.choice(n, size=n // 10, replace=False)] = 0.0
            b = rng.standard_normal(n)

            x = banded_cholesky_solve(banded_from_penalty(n, order, lam, w), b)
            expected = np.linalg.solve(dense.system(n, order, lam, w), b)

            assert np.linalg.norm(x - expected) <= 1e-10 * np.linalg.norm(expected)

    def test_residual_bound(self, rng):
        """Test that the solution satisfies the system to 1e-10 relative."""
        matrix = banded_from_penalty(150, 2, 10.0, np.ones(150))
        b = rng.standard_normal(150)

        x = banded_cholesky_solve(matrix, b)

        assert np.linalg.norm(matrix.matvec(x) - b) <= 1e-10 * np.linalg.norm(b)

    def test_deterministic(self, rng):
        """Test that repeated solves are bit-identical."""
        matrix = banded_from_penalty(80, 3, 42.0, rng.uniform(0.5, 1, 80))
        b = rng.standard_normal(80)

        np.testing.assert_array_equal(banded_cholesky_solve(matrix, b), banded_cholesky_solve(matrix, b))


class TestBandedInverseDiagonal:
    """Tests for banded_inverse_diagonal function."""

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_matches_dense_inverse(self, order, rng, dense):
        """Test the selected inversion against a dense inverse."""
        n = 40
        w = rng.uniform(0.3, 1, n)
        factor = banded_cholesky_factor(banded_from_penalty(n, order, 3.0, w))

        expected = np.diag(np.linalg.inv(dense.system(n, order, 3.0, w)))

        np.testing.assert_allclose(banded_inverse_diagonal(factor), expected, rtol=1e-10)

    def test_stacked_factors(self, rng):
        """Test that a stack of factors gives the same rows as single calls."""
        w = rng.uniform(0.3, 1, 25)
        factors = np.stack(
            [banded_cholesky_factor(banded_from_penalty(25, 2, lam, w)) for lam in (0.1, 1.0, 10.0)]
        )

        stacked = banded_inverse_diagonal(factors)

        assert stacked.shape == (3, 25)
        for k in range(3):
            np.testing.assert_allclose(stacked[k], banded_inverse_diagonal(factors[k]), rtol=1e-14)
