"""
Visual Reporter
===============
Static SVG charts of simulation results.

Charts generated:
    - Outputs against reference
    - Error norm on a log scale
    - Temperature field of the heat benchmark

SVG files carry no date and a fixed hash salt, so reruns are byte-identical.

Usage:
    reporter = VisualReporter("reports/charts")
    reporter.plot_outputs(result)
"""

import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

# Use non-interactive backend for headless environments
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


class VisualReporter:
    """Generates matplotlib SVG charts from simulation results."""

    COLORS = {
        "primary": "#2196F3",
        "success": "#4CAF50",
        "warning": "#FF9800",
        "danger": "#F44336",
        "dark": "#37474F",
    }

    OUTPUT_COLORS = ["#2196F3", "#4CAF50", "#FF9800", "#9C27B0", "#00BCD4", "#795548"]

    def __init__(self, output_dir: str = "reports/charts", style: str = "default"):
        """
        Args:
            output_dir: Directory to save SVG files.
            style: Matplotlib style name.
        """
        self.output_dir = output_dir
        self.style = style
        os.makedirs(output_dir, exist_ok=True)

    def _save(self, fig, filename: str) -> str:
        filepath = os.path.join(self.output_dir, filename)
        with plt.rc_context({"svg.hashsalt": "regulator", "svg.fonttype": "path"}):
            fig.savefig(filepath, format="svg", metadata={"Date": None}, bbox_inches="tight")
        plt.close(fig)
        logger.info(f"Chart saved: {filepath}")
        return filepath

    def plot_outputs(self, result, filename: str = "outputs.svg") -> str:
        """Outputs y_i(t) (solid) against references y_ref,i(t) (dashed)."""
        with plt.style.context(self.style):
            fig, ax = plt.subplots(figsize=(10, 5))
            for i in range(result.outputs.shape[1]):
                color = self.OUTPUT_COLORS[i % len(self.OUTPUT_COLORS)]
                ax.plot(result.times, np.real(result.outputs[:, i]), color=color,
                        linewidth=1.5, label=f"y{i + 1}")
                ax.plot(result.times, np.real(result.reference[:, i]), color=color,
                        linestyle="--", linewidth=1.0, label=f"yref{i + 1}")
            ax.set_xlabel("t", fontsize=12)
            ax.set_ylabel("output", fontsize=12)
            ax.set_title("Outputs and reference", fontsize=13)
            ax.grid(alpha=0.3)
            ax.legend(loc="best", fontsize=10)
        return self._save(fig, filename)

    def plot_error_norm(self, result, filename: str = "error_norm.svg") -> str:
        """||e(t)|| on a log axis with the fitted decay rate in the title."""
        norms = result.error_norm
        with plt.style.context(self.style):
            fig, ax = plt.subplots(figsize=(10, 4))
            ax.semilogy(result.times, np.maximum(norms, 1e-300), color=self.COLORS["danger"], linewidth=1.5)
            ax.set_xlabel("t", fontsize=12)
            ax.set_ylabel("||e(t)||", fontsize=12)
            ax.set_title(f"Regulation error (fitted decay rate {result.alpha:.3g})", fontsize=13)
            ax.grid(alpha=0.3, which="both")
        return self._save(fig, filename)

    def plot_temperature_field(self, xi1, xi2, T, t: float, filename: str = "temperature.svg") -> str:
        """Filled contour of T[i, j] at (xi1[i], xi2[j])."""
        with plt.style.context(self.style):
            fig, ax = plt.subplots(figsize=(6, 5))
            X1, X2 = np.meshgrid(xi1, xi2, indexing="ij")
            contour = ax.contourf(X1, X2, np.real(T), levels=30, cmap="plasma")
            fig.colorbar(contour, ax=ax)
            ax.set_xlabel("xi1", fontsize=12)
            ax.set_ylabel("xi2", fontsize=12)
            ax.set_title(f"Temperature at t = {t:g}", fontsize=13)
            ax.set_aspect("equal")
        return self._save(fig, filename)
