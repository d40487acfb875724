"""Pytest configuration and shared fixtures for the smoothing test suite.

This module provides reusable signals, dense-matrix reference
implementations, sample-file paths and temporary configuration files.
"""

import logging
import os
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from src.core.smoother import Signal


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size benchmark runs (deselect with -m \"not slow\")")


REPO_ROOT = Path(__file__).resolve().parent.parent
SAMPLES_DIR = REPO_ROOT / "data" / "samples"
GOLDEN_DIR = REPO_ROOT / "tests" / "golden"


class DenseOracle:
    """Straight-from-definition dense implementations used as references."""

    @staticmethod
    def difference_matrix(n, order):
        return np.diff(np.eye(n), n=order, axis=0)

    @classmethod
    def system(cls, n, order, lam, w):
        d = cls.difference_matrix(n, order)
        return np.diag(np.asarray(w, dtype=float)) + lam * d.T @ d

    @classmethod
    def smooth(cls, y, lam, order, w=None):
        y = np.asarray(y, dtype=float)
        w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
        rhs = w * np.where(w > 0, y, 0.0)
        return np.linalg.solve(cls.system(len(y), order, lam, w), rhs)

    @classmethod
    def hat_diagonal(cls, n, order, lam, w=None):
        w = np.ones(n) if w is None else np.asarray(w, dtype=float)
        return np.diag(np.linalg.inv(cls.system(n, order, lam, w)) @ np.diag(w))

    @classmethod
    def loo_sigma(cls, y, lam, order, w=None):
        """Leave-one-out error by zeroing each observed weight and re-smoothing."""
        y = np.asarray(y, dtype=float)
        w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
        errors = []
        for i in np.flatnonzero(w > 0):
            held_out = w.copy()
            held_out[i] = 0.0
            prediction = cls.smooth(y, lam, order, held_out)[i]
            errors.append(y[i] - prediction)
        return np.sqrt(np.mean(np.square(errors)))

    @staticmethod
    def naive_power(x):
        """One-sided |DFT|² by explicit O(n²) summation, normalized."""
        x = np.asarray(x, dtype=float)
        n = len(x)
        q = np.arange(n // 2 + 1)[:, np.newaxis]
        k = np.arange(n)[np.newaxis, :]
        spectrum = np.abs(np.exp(-2j * np.pi * q * k / n) @ x) ** 2
        return spectrum / spectrum.sum()

    @classmethod
    def naive_entropy(cls, x):
        p = cls.naive_power(x)
        p = p[p > 0]
        return float(-np.sum(p * np.log(p)))


@pytest.fixture
def dense():
    """Provide the dense reference implementations.

    Returns:
        type: DenseOracle class with static helpers.
    """
    return DenseOracle


@pytest.fixture
def rng():
    """Provide a seeded random generator."""
    return np.random.default_rng(12345)


def make_noisy_sine(n, sigma=0.2, seed=0, cycles=2.0, gaps=()):
    t = np.arange(n, dtype=float)
    noise = np.random.default_rng(seed).standard_normal(n)
    y = np.sin(2 * np.pi * cycles * t / n) + sigma * noise
    w = np.ones(n)
    w[list(gaps)] = 0.0
    y[list(gaps)] = 0.0
    return Signal(t=t, y=y, w=w)


@pytest.fixture
def noisy_sine():
    """Provide a factory for noisy sine signals on an index grid.

    Returns:
        callable: make_noisy_sine(n, sigma=0.2, seed=0, cycles=2.0, gaps=()).
    """
    return make_noisy_sine


@pytest.fixture
def samples_dir():
    """Provide the bundled sample data directory."""
    return SAMPLES_DIR


@pytest.fixture
def golden_dir():
    """Provide the directory of reference outputs for the bundled samples.

    Each sample has smoothed.csv and diagnostics.csv from a default run
    (order 2, S-curve, default grid), written by an independent
    extended-precision implementation. chosen_lambda.csv lists the choice
    of every selector per sample.
    """
    return GOLDEN_DIR


@pytest.fixture
def config_files(tmp_path):
    """Write a minimal config.yaml / benchmark.yaml pair.

    Returns:
        tuple: (config_path, benchmark_path) as strings.
    """
    config_file = tmp_path / "config.yaml"
    benchmark_file = tmp_path / "benchmark.yaml"
    config_file.write_text("ORDER: 2\nSELECT: scurve\nSHARED_KEY: from_config\n")
    benchmark_file.write_text("N: 200\nTRIALS: 2\nSHARED_KEY: from_benchmark\n")
    return str(config_file), str(benchmark_file)


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Drop handlers configure_logging attached to captured streams."""
    yield
    package_logger = logging.getLogger("src")
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
    package_logger.setLevel(logging.NOTSET)


@pytest.fixture
def clean_env():
    """Remove SMOOTHER_* variables for the duration of the test."""
    kept = {k: v for k, v in os.environ.items() if not k.startswith("SMOOTHER_")}
    with patch.dict(os.environ, kept, clear=True):
        yield
