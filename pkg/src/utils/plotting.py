"""SVG line plots for smoothing runs and benchmark reports."""

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

COLOR_DATA = "#9e9e9e"
COLOR_SMOOTH = "#1f77b4"
COLOR_MARKER = "#d62728"

# no timestamp in the SVG header and a fixed salt for element ids
_SVG_METADATA = {"Date": None}
_SVG_RC = {"svg.hashsalt": "whittaker-smoother"}

CURVE_LABELS = {
    "cv": "cross-validation error",
    "vcurve": "V-curve distance",
    "scurve": "S-curve distance",
}


def _save(fig, out_path: Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    with plt.rc_context(_SVG_RC):
        fig.savefig(out_path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    return out_path


def plot_smoothing(signal, result, out_path: Path, title: Optional[str] = None) -> Path:
    """Observed samples with the smoothed curve on top; gaps are not drawn."""
    fig, ax = plt.subplots(figsize=(9, 5))
    observed = signal.observed
    ax.scatter(signal.t[observed], signal.y[observed], s=6, alpha=0.6, color=COLOR_DATA, label="observed")
    ax.plot(signal.t, result.s_hat, linewidth=1.4, color=COLOR_SMOOTH, label=f"smooth (lambda={result.lam:.3g})")
    ax.set_title(title or f"Whittaker smoothing, order {result.order}")
    ax.set_xlabel("t")
    ax.set_ylabel("y")
    ax.legend(loc="best")
    return _save(fig, out_path)


def plot_selection(diagnostics, out_path: Path) -> Path:
    """Selection curve against λ on a log axis with the chosen λ marked."""
    fig, ax = plt.subplots(figsize=(9, 5))
    ax.plot(diagnostics.curve_x, diagnostics.curve_y, linewidth=1.2, color=COLOR_SMOOTH)
    k = diagnostics.curve_index
    ax.plot([diagnostics.curve_x[k]], [diagnostics.curve_y[k]], marker="o", color=COLOR_MARKER)
    ax.axvline(diagnostics.chosen_lambda, linestyle="--", linewidth=1.0, color=COLOR_MARKER)
    ax.set_xscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel(CURVE_LABELS.get(diagnostics.method, diagnostics.method))
    ax.set_title(f"{diagnostics.method}: lambda = {diagnostics.chosen_lambda:.4g}")
    return _save(fig, out_path)


def plot_benchmark(frame: pd.DataFrame, lambda_path: Path, error_path: Path) -> None:
    """Selector λ against λ₀ and selector error against the oracle error.

    Both axes are logarithmic; points on the dashed diagonal match the oracle.
    """
    series = [("cv", "CV"), ("vc", "V-curve"), ("s", "S-curve")]
    for prefix, path, label in (("lambda", lambda_path, "lambda"), ("mse", error_path, "error")):
        fig, ax = plt.subplots(figsize=(6, 6))
        reference = frame[f"{prefix}_opt"].to_numpy()
        for suffix, name in series:
            ax.scatter(reference, frame[f"{prefix}_{suffix}"], s=12, alpha=0.7, label=name)
        positive = reference[reference > 0]
        if len(positive):
            span = np.array([positive.min(), positive.max()])
            ax.plot(span, span, linestyle="--", linewidth=1.0, color=COLOR_DATA)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(f"optimal {label}")
        ax.set_ylabel(f"selected {label}")
        ax.legend(loc="best")
        _save(fig, path)
