"""Normalized power spectra and Shannon spectral entropy of real series.

The spectrum is one-sided (q = 0..⌊n/2⌋) with no mean removal, windowing
or padding. Entropy is in nats with the 0·log 0 = 0 convention.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.fft import rfft
from scipy.special import entr

from src.core.errors import DimensionMismatch, NonFiniteInput


MIN_SPECTRUM_LENGTH = 4

# total power at or below this many units per sample counts as silence
POWER_FLOOR_PER_SAMPLE = 1e-300


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """Normalized one-sided power spectrum.

    Attributes:
        bins: Nonnegative bin values summing to 1, or all zero when degenerate.
        total_power: Sum of squared magnitudes before normalization.
        degenerate: True when total_power fell below the floor.
    """

    bins: np.ndarray
    total_power: float
    degenerate: bool = False


@dataclass(frozen=True)
class SpectralEntropy:
    value: float
    degenerate: bool = False


def _as_series(x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < MIN_SPECTRUM_LENGTH:
        raise DimensionMismatch(
            f"spectrum needs a 1-D series of at least {MIN_SPECTRUM_LENGTH} samples, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("spectrum input contains NaN or infinite values")
    return x


def power_spectrum(x: ArrayLike) -> PowerSpectrum:
    """Squared DFT magnitudes over q = 0..⌊n/2⌋, normalized to sum 1.

    Raises:
        NonFiniteInput: If x holds NaN or inf.
        DimensionMismatch: If x has fewer than 4 samples.

    Example:
        >>> k = np.arange(64)
        >>> spec = power_spectrum(np.cos(2 * np.pi * 8 * k / 64))
        >>> int(np.argmax(spec.bins)), round(float(spec.bins.max()), 12)
        (8, 1.0)
    """
    x = _as_series(x)
    power = np.abs(rfft(x)) ** 2
    total = float(np.sum(power))
    if total <= POWER_FLOOR_PER_SAMPLE * len(x):
        return PowerSpectrum(bins=np.zeros_like(power), total_power=total, degenerate=True)
    return PowerSpectrum(bins=power / total, total_power=total)


def spectral_entropy(x: ArrayLike) -> SpectralEntropy:
    """Shannon entropy -Σ F(q) log F(q) of the normalized power spectrum.

    A silent input has an all-zero spectrum and entropy 0, flagged as
    degenerate. The result lies in [0, log(⌊n/2⌋ + 1)].
    """
    spectrum = power_spectrum(x)
    if spectrum.degenerate:
        return SpectralEntropy(value=0.0, degenerate=True)
    upper = np.log(len(spectrum.bins))
    value = float(np.sum(entr(spectrum.bins)))
    return SpectralEntropy(value=min(max(value, 0.0), upper))
