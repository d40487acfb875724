"""Unit tests for plotting module."""

import pandas as pd

from src.core.benchmark import REPORT_COLUMNS
from src.core.selectors import lambda_grid, select_vcurve
from src.core.smoother import whittaker_smooth
from src.utils.plotting import plot_benchmark, plot_selection, plot_smoothing


class TestPlots:
    """Tests for the SVG writers."""

    def test_plot_smoothing(self, noisy_sine, tmp_path):
        """Test that a smoothing plot is written as SVG without a timestamp."""
        signal = noisy_sine(100, gaps=range(10, 15))
        result = whittaker_smooth(signal, 10.0)

        path = plot_smoothing(signal, result, tmp_path / "plots" / "smoothed.svg")

        content = path.read_text()
        assert "<svg" in content
        assert "<dc:date>" not in content

    def test_plot_selection(self, noisy_sine, tmp_path):
        """Test the selection curve plot."""
        diagnostics = select_vcurve(noisy_sine(100), lambda_grid(0, 4, 3))

        path = plot_selection(diagnostics, tmp_path / "selection.svg")

        assert path.exists()

    def test_plot_selection_is_reproducible(self, noisy_sine, tmp_path):
        """Test that the same figure gives identical bytes."""
        diagnostics = select_vcurve(noisy_sine(100), lambda_grid(0, 4, 3))

        first = plot_selection(diagnostics, tmp_path / "a.svg").read_bytes()
        second = plot_selection(diagnostics, tmp_path / "b.svg").read_bytes()

        assert first == second

    def test_plot_benchmark(self, tmp_path):
        """Test that both comparison plots are written."""
        row = [0.1, 0, 10.0, 0.01, 20.0, 0.02, 5.0, 0.03, 12.0, 0.011]
        frame = pd.DataFrame([row, [0.2] + row[1:]], columns=REPORT_COLUMNS)

        plot_benchmark(frame, tmp_path / "lambda.svg", tmp_path / "error.svg")

        assert (tmp_path / "lambda.svg").exists()
        assert (tmp_path / "error.svg").exists()
