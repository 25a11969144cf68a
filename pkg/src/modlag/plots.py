"""Matplotlib figure rendering for study outputs.

Figures are written as PNG files next to the CSV data.  The Agg backend is
forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_trajectories(path, trajectories, labels, title: str = "") -> None:
    """1-D problems: x(t) curves; 2-D problems: orbits in the plane."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for traj, label in zip(trajectories, labels):
        if traj.states.shape[1] == 1:
            style = "o" if traj.source == "discrete" else "-"
            ax.plot(traj.times, traj.states[:, 0], style, label=label,
                    markersize=3)
            ax.set_xlabel("t")
            ax.set_ylabel("x")
        else:
            style = "o" if traj.source == "discrete" else "-"
            ax.plot(traj.states[:, 0], traj.states[:, 1], style, label=label,
                    markersize=2, linewidth=0.8)
            ax.set_xlabel("x0")
            ax.set_ylabel("x1")
            ax.set_aspect("equal", adjustable="datalim")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_order_study(path, study, title: str = "defect order study") -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.loglog(study.hs, study.defects, "o-",
              label=f"fitted slope {study.slope:.2f}")
    h0, d0 = study.hs[0], study.defects[0]
    ref = [d0 * (h / h0) ** study.expected for h in study.hs]
    ax.loglog(study.hs, ref, "--",
              label=f"reference slope {study.expected:g}")
    ax.set_xlabel("h")
    ax.set_ylabel("sup defect")
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_comparison(path, comparison, title: str = "mesh-point deviation") -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(comparison["times"], comparison["deviation"], "-")
    ax.set_xlabel("t")
    ax.set_ylabel("|x_discrete - x_modeq|")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
