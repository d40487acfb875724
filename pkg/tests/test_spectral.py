"""Unit tests for spectral module."""

import numpy as np
import pytest

from src.core.errors import DimensionMismatch, NonFiniteInput
from src.core.spectral import power_spectrum, spectral_entropy


class TestPowerSpectrum:
    """Tests for power_spectrum function."""

    def test_pure_tone(self):
        """Test that a bin-aligned cosine puts all power in its bin."""
        k = np.arange(64)

        spectrum = power_spectrum(np.cos(2 * np.pi * 8 * k / 64))

        assert len(spectrum.bins) == 33
        assert int(np.argmax(spectrum.bins)) == 8
        assert spectrum.bins[8] == pytest.approx(1.0, abs=1e-12)

    def test_constant_is_all_dc(self):
        """Test that a constant series has only the zero-frequency bin."""
        spectrum = power_spectrum(np.full(20, 3.0))

        assert spectrum.bins[0] == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(spectrum.bins[1:], 0.0, atol=1e-12)

    @pytest.mark.parametrize("n", [37, 50, 128])
    def test_matches_naive_dft(self, n, rng, dense):
        """Test against explicit DFT summation for odd and even lengths."""
        x = rng.standard_normal(n)

        spectrum = power_spectrum(x)

        assert len(spectrum.bins) == n // 2 + 1
        np.testing.assert_allclose(spectrum.bins, dense.naive_power(x), rtol=0, atol=1e-12)

    def test_bins_sum_to_one(self, rng):
        """Test the normalization of a random series."""
        spectrum = power_spectrum(rng.standard_normal(101))

        assert np.sum(spectrum.bins) == pytest.approx(1.0, abs=1e-12)
        assert np.all(spectrum.bins >= 0)
        assert not spectrum.degenerate

    def test_silent_series_is_degenerate(self):
        """Test that an all-zero series is flagged instead of dividing by zero."""
        spectrum = power_spectrum(np.zeros(16))

        assert spectrum.degenerate
        assert spectrum.total_power == 0.0
        np.testing.assert_array_equal(spectrum.bins, 0.0)

    def test_non_finite(self):
        """Test that NaN input raises NonFiniteInput."""
        with pytest.raises(NonFiniteInput):
            power_spectrum([1.0, np.nan, 0.0, 1.0])

    def test_too_short(self):
        """Test that fewer than 4 samples raise DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            power_spectrum([1.0, 2.0, 3.0])


class TestSpectralEntropy:
    """Tests for spectral_entropy function."""

    def test_pure_tone_has_zero_entropy(self):
        """Test that a single occupied bin gives entropy 0."""
        k = np.arange(64)

        entropy = spectral_entropy(np.sin(2 * np.pi * 5 * k / 64))

        assert entropy.value == pytest.approx(0.0, abs=1e-10)
        assert not entropy.degenerate

    def test_impulse_has_maximal_entropy(self):
        """Test that a flat spectrum reaches log(n/2 + 1)."""
        x = np.zeros(64)
        x[0] = 1.0

        assert spectral_entropy(x).value == pytest.approx(np.log(33), rel=1e-12)

    def test_matches_naive_entropy(self, rng, dense):
        """Test a random series against the explicit formula."""
        x = rng.standard_normal(90)

        assert spectral_entropy(x).value == pytest.approx(dense.naive_entropy(x), rel=1e-10)

    def test_bounded(self, rng):
        """Test that entropy lies within [0, log(n/2 + 1)]."""
        for n in (4, 17, 256):
            value = spectral_entropy(rng.standard_normal(n)).value
            assert 0.0 <= value <= np.log(n // 2 + 1)

    def test_silent_series(self):
        """Test that silence gives entropy 0 flagged as degenerate."""
        entropy = spectral_entropy(np.zeros(10))

        assert entropy.value == 0.0
        assert entropy.degenerate

    def test_white_noise_exceeds_smooth_signal(self, rng):
        """Test that noise spreads power more than a slow trend."""
        k = np.arange(256)
        trend = np.sin(2 * np.pi * k / 256) + 0.5 * np.sin(2 * np.pi * 3 * k / 256)

        assert spectral_entropy(rng.standard_normal(256)).value > spectral_entropy(trend).value

    def test_amplitude_invariance(self, rng):
        """Test that scaling the series leaves the entropy unchanged."""
        x = rng.standard_normal(200)

        assert spectral_entropy(1e3 * x).value == pytest.approx(spectral_entropy(x).value, abs=1e-10)
        assert spectral_entropy(1e-3 * x).value == pytest.approx(spectral_entropy(x).value, abs=1e-10)

    @pytest.mark.parametrize("n", [4, 5, 8, 31, 64, 255, 256])
    def test_naive_agreement_across_lengths(self, n, dense):
        """Test agreement with the explicit DFT for short and long inputs."""
        x = np.random.default_rng(n).standard_normal(n)

        assert spectral_entropy(x).value == pytest.approx(dense.naive_entropy(x), abs=1e-9)
