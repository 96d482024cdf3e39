"""SVG figures. Output is byte-stable: no timestamp and a fixed id salt."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "robinstab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_norm_and_inputs(trajectories: dict, path):
    """Two panels: ||y(t)|| on a log axis and the boundary inputs.

    ``trajectories`` maps a legend label to a trajectory.
    """
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for label, tr in trajectories.items():
        ax0.semilogy(tr.times, np.maximum(tr.state_norm, 1e-300), label=label)
        for m in (0, 1):
            if np.any(tr.inputs[:, m] != 0):
                ax1.plot(tr.times, tr.inputs[:, m], label=f"{label}: u{m + 1}")
    ax0.set_ylabel("||y(t)||")
    ax0.legend()
    ax1.set_xlabel("t")
    ax1.set_ylabel("u(t)")
    ax1.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_field(times, x, field, path, title=""):
    fig, ax = plt.subplots(figsize=(7, 4))
    mesh = ax.pcolormesh(times, x, np.asarray(field).T, shading="auto", cmap="RdBu_r",
                         rasterized=True)
    fig.colorbar(mesh, ax=ax, label="y(t, x)")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
