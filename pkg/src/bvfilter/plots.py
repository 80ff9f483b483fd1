"""Figure rendering for simulation and filtering outputs.

All functions write PNG files next to the delimited outputs; nothing is
shown interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .results import EstimateSeries


def plot_estimate(series: EstimateSeries, path) -> None:
    """Mean with a two-sigma band per component, plus the mass trace."""
    t = series.t
    m = series.mean.shape[1]
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for i in range(m):
        mu = series.mean[:, i]
        sd = np.sqrt(np.maximum(series.cov[:, i, i], 0.0))
        line, = ax0.plot(t, mu, label=f"mean[{i + 1}]")
        ax0.fill_between(t, mu - 2 * sd, mu + 2 * sd, alpha=0.2, color=line.get_color())
    ax0.set_ylabel("state estimate")
    ax0.legend(loc="best")
    ax0.grid(alpha=0.3)
    ax1.plot(t, series.log_mass, color="k", label="log mass")
    if "ess" in series.extras:
        ax1b = ax1.twinx()
        ax1b.plot(t, series.extras["ess"], color="tab:orange", alpha=0.7, label="ESS")
        ax1b.set_ylabel("ESS")
    ax1.set_xlabel("t")
    ax1.set_ylabel("log mass")
    ax1.grid(alpha=0.3)
    fig.suptitle(f"{series.method} estimate")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_compare(tables: dict, path) -> None:
    """Overlay mean trajectories and log-mass traces from estimate tables."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for label, cols in tables.items():
        t = cols["t"]
        for name in sorted(c for c in cols if c.startswith("mean_")):
            ax0.plot(t, cols[name], label=f"{label} {name}")
        if "log_mass" in cols:
            ax1.plot(t, cols["log_mass"], label=label)
    ax0.set_ylabel("mean")
    ax0.legend(loc="best", fontsize=8)
    ax0.grid(alpha=0.3)
    ax1.set_xlabel("t")
    ax1.set_ylabel("log mass")
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_paths(t: np.ndarray, x: np.ndarray, y: np.ndarray | None, path) -> None:
    """Signal trajectories (and observations when given) against time.

    `x` has shape (paths, K+1, m) or (K+1, m); `y` likewise with n columns.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    panels = 1 if y is None else 2
    fig, axes = plt.subplots(panels, 1, figsize=(8, 3 * panels), sharex=True, squeeze=False)
    ax0 = axes[0, 0]
    for i in range(x.shape[2]):
        for p in range(x.shape[0]):
            ax0.plot(t, x[p, :, i], alpha=min(1.0, 3.0 / x.shape[0]),
                     color=f"C{i}", label=f"x[{i + 1}]" if p == 0 else None)
    ax0.set_ylabel("signal")
    ax0.legend(loc="best")
    ax0.grid(alpha=0.3)
    if y is not None:
        y = np.asarray(y, dtype=float)
        if y.ndim == 2:
            y = y[None]
        ax1 = axes[1, 0]
        for i in range(y.shape[2]):
            for p in range(y.shape[0]):
                ax1.plot(t, y[p, :, i], alpha=min(1.0, 3.0 / y.shape[0]),
                         color=f"C{i}", label=f"y[{i + 1}]" if p == 0 else None)
        ax1.set_ylabel("observation")
        ax1.legend(loc="best")
        ax1.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
