"""Matplotlib rendering of simulation reports to image files."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .fields import Grid1D
from .calculus import StateFields

__all__ = ["render_decay_figure", "render_snapshot_figure"]


def render_decay_figure(records, path) -> str:
    """Semilog plot of the functional and the entropy production integral."""
    t = [r.t for r in records]
    v = [max(r.v_meq, 0.0) for r in records]
    xi = [r.entropy_production_integral for r in records]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(t, v, label="V_meq", color="tab:blue")
    ax.semilogy(t, xi, label="entropy production", color="tab:orange",
                linestyle="--")
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title("Decay of the Lyapunov-type functional")
    ax.legend(frameon=False)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.fspath(path)


def render_snapshot_figure(grid: Grid1D, w: StateFields, path,
                           title: str = "state") -> str:
    """Stacked profiles of density, velocity, and temperature."""
    x = grid.centers()
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 6.5), sharex=True)
    for ax, values, label in zip(axes, (w.rho, w.v, w.theta),
                                 ("rho", "v", "theta")):
        ax.plot(x, values, color="tab:blue")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("x")
    axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return os.fspath(path)
