"""
Plot styling and the figure writers used by the commands.
Provides a flat, light look for SVG output.
"""
import math
from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Palette
COLOR_BG_MAIN = "#FFFFFF"
COLOR_TEXT_PRIMARY = "#1D1D1F"
COLOR_TEXT_SECONDARY = "#86868B"
COLOR_GRID = "#D2D2D7"
COLOR_POINTS = "#1D1D1F"
COLOR_UNIT_CIRCLE = "#FF3B30"   # red
COLOR_GAP_CIRCLE = "#34C759"    # green
COLOR_ACCENT = "#0071E3"

# Fonts
FONT_SIZE = 9
FONT_SIZE_TITLE = 11

# One colour per snapshot or nu value, cycled
SERIES_COLORS = ("#0071E3", "#FF9F0A", "#34C759", "#AF52DE", "#FF3B30", "#5AC8FA")

SVG_SALT = "ruelle-resonance-lab"


class PlotTheme:
    """Applies the lab's matplotlib style."""

    def __init__(self):
        self.params = {
            "figure.facecolor": COLOR_BG_MAIN,
            "axes.facecolor": COLOR_BG_MAIN,
            "axes.edgecolor": COLOR_GRID,
            "axes.labelcolor": COLOR_TEXT_PRIMARY,
            "axes.titlesize": FONT_SIZE_TITLE,
            "axes.grid": True,
            "grid.color": COLOR_GRID,
            "grid.linestyle": ":",
            "font.size": FONT_SIZE,
            "xtick.color": COLOR_TEXT_SECONDARY,
            "ytick.color": COLOR_TEXT_SECONDARY,
            "svg.hashsalt": SVG_SALT,
            "svg.fonttype": "none",
        }

    def apply(self):
        """Apply the theme to matplotlib's global settings."""
        matplotlib.rcParams.update(self.params)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no date so reruns produce identical files
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _circle(ax, radius, color, label):
    t = np.linspace(0.0, 2.0 * math.pi, 721)
    ax.plot(radius * np.cos(t), radius * np.sin(t), color=color, linewidth=1.0, label=label)


def spectrum_plot(path, spectra: Dict[float, np.ndarray], e_min: float, title: str = "") -> Path:
    """
    Eigenvalues of several nu in one scatter, with the unit circle and the
    circle of radius 1/sqrt(E_min).
    """
    PlotTheme().apply()
    fig, ax = plt.subplots(figsize=(6, 6))
    _circle(ax, 1.0, COLOR_UNIT_CIRCLE, "|z| = 1")
    _circle(ax, 1.0 / math.sqrt(e_min), COLOR_GAP_CIRCLE, "|z| = 1/sqrt(E_min)")
    for i, (nu, values) in enumerate(spectra.items()):
        values = np.asarray(values)
        color = COLOR_POINTS if len(spectra) == 1 else SERIES_COLORS[i % len(SERIES_COLORS)]
        ax.scatter(values.real, values.imag, s=6, color=color, label=f"nu = {nu:g}")
    ax.set_aspect("equal")
    ax.set_xlim(-1.1, 1.1)
    ax.set_ylim(-1.1, 1.1)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=FONT_SIZE - 2)
    return _save(fig, path)


def points_plot(path, groups: Dict[str, Sequence[np.ndarray]], xlabel: str, ylabel: str,
                title: str = "", limits: Optional[tuple] = None, equal: bool = False) -> Path:
    """Scatter of labelled (x, y) point groups."""
    PlotTheme().apply()
    fig, ax = plt.subplots(figsize=(6, 6))
    for i, (label, (xs, ys)) in enumerate(groups.items()):
        ax.scatter(xs, ys, s=0.5, color=SERIES_COLORS[i % len(SERIES_COLORS)], label=label,
                   marker=".", rasterized=True)
    if limits is not None:
        ax.set_xlim(*limits[0])
        ax.set_ylim(*limits[1])
    if equal:
        ax.set_aspect("equal")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(groups) > 1:
        ax.legend(loc="upper right", fontsize=FONT_SIZE - 2, markerscale=10)
    return _save(fig, path)


def series_plot(path, curves: Dict[str, tuple], xlabel: str, ylabel: str, title: str = "",
                log_y: bool = False) -> Path:
    """Line plot of labelled (x, y) curves."""
    PlotTheme().apply()
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, (label, (xs, ys)) in enumerate(curves.items()):
        ax.plot(xs, ys, marker="o", markersize=3, color=SERIES_COLORS[i % len(SERIES_COLORS)], label=label)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=FONT_SIZE - 2)
    return _save(fig, path)
