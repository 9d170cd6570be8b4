"""
Optional PNG figures written next to the tables.

Figures are drawn with the Agg canvas directly so the global matplotlib
backend is left untouched.
"""

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLES = {"Q_exact": "-", "Q_interp": "--", "Q_osc": ":"}


def _save(fig, path):
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata={"Software": None})


def plot_distribution(table, path, title=None):
    """Readout distributions against k."""
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    k = table.data[:, 0]
    for i, name in enumerate(table.columns[1:], start=1):
        ax.plot(k, table.data[:, i], STYLES.get(name, "-"), label=name)
    ax.set_xlabel("k")
    ax.set_ylabel("Q(k)")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_characteristic(table, path):
    """Real and imaginary parts of a characteristic function."""
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    t = table.data[:, 0]
    for i, name in enumerate(table.columns[1:], start=1):
        ax.plot(t, table.data[:, i], "-" if "exact" in name else "--", label=name)
    ax.set_xlabel(table.columns[0])
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_sweep(table, path):
    """Largest |Q_exact - Q_interp| against the swept value."""
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    value, diff = table.data[:, 1], table.data[:, -1]
    ax.plot(value, diff, "o-")
    if np.all(value > 0) and np.all(diff > 0):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(table.name.removeprefix("sweep_"))
    ax.set_ylabel("max |Q_exact - Q_interp|")
    fig.tight_layout()
    _save(fig, path)
